#pragma once

#include <array>
#include <span>
#include <vector>

#include "nvmux/probe.hpp"
#include "nvmux/spinmodel.hpp"

namespace nvmux {

struct OdmrOptions {
    double d0_mhz = 2870.0;      // zero-field splitting
    double dip_depth = 0.05;     // fractional PL drop at each resonance
    double dip_hwhm_mhz = 4.0;   // Lorentzian half width
    double gamma = kGammaNv;
};

struct OdmrDip {
    int sensor = 0;       // 0 or 1
    int branch = -1;      // -1 for m_S = 0 -> -1, +1 for 0 -> +1
    double center_mhz = 0.0;
};

struct OdmrSpectrum {
    std::vector<double> freq_mhz;
    std::vector<double> pl;
    std::array<OdmrDip, 4> transitions{};
    /// Dips after merging each sensor's pair when it is unresolved (splitting < HWHM).
    std::vector<OdmrDip> resolved_dips;
    /// Distinct centers across both sensors after merging within one HWHM.
    std::size_t distinct_centers = 0;
    /// True if any two of the four transitions lie within one FWHM.
    bool overlapping = false;
};

/// Inclusive grid start, start + step, ... up to stop (within 1e-9 step).
std::vector<double> frequency_grid(double start_mhz, double stop_mhz, double step_mhz);

/// D0 -/+ (gamma / 2 pi) |e . B|, in MHz.
std::array<double, 2> transition_frequencies(const NvSensor& sensor, const Vec3& bias_t,
                                             const OdmrOptions& opts = {});

OdmrSpectrum odmr_spectrum(const ProbePair& probe, const Vec3& bias_t, std::span<const double> grid_mhz,
                           const OdmrOptions& opts = {});

/// Number of strict local minima of a sampled curve (plateaus count once).
std::size_t count_local_minima(std::span<const double> values);

}  // namespace nvmux
