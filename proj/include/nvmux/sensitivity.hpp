#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "nvmux/demux.hpp"
#include "nvmux/probe.hpp"
#include "nvmux/spinmodel.hpp"

namespace nvmux {

/// Single: the sensors are read one after the other with a standard
/// four-phase Ramsey readout while the other sensor idles (still fluorescing).
/// Multiplexed: both are read together with the sixteen-combination schedule.
enum class SensingMode { Single, Multiplexed };

struct SensitivityReport {
    SensingMode mode = SensingMode::Multiplexed;
    std::array<double, 2> sigma_phase{};            // rad, propagated, rms over trials
    std::array<double, 2> empirical_sigma_phase{};  // rad, scatter over trials (0 if < 2 trials)
    std::array<double, 2> sigma_field_t{};          // sigma_phase / (gamma tau)
    std::array<double, 2> eta{};                    // T / sqrt(Hz)
    double combined_eta = 0.0;                      // inverse-variance combination
    double measurement_time_s = 0.0;
};

/// 1 / sqrt(sum 1 / eta_i^2); infinite entries carry no weight.
double combine_inverse_variance(std::span<const double> etas);

/// Sensitivity of one completed measurement from its phase estimates.
SensitivityReport sensitivity_from_estimates(const std::array<PhaseEstimate, 2>& estimates,
                                             const RamseyConfig& cfg, double measurement_time_s,
                                             SensingMode mode);

struct SensitivityRun {
    PhasePair phases{0.0, 0.0};
    std::uint64_t budget_shots = 1600000;  // total shots, shared by both sensors
    std::size_t trials = 100;
    double overhead_s = 3e-6;               // laser initialization and readout per shot
    std::uint64_t seed = 0;
};

/// Repeats a synthetic measurement `trials` times within the shot budget.
SensitivityReport estimate_sensitivity(const ProbePair& probe, const RamseyConfig& cfg,
                                       const SensitivityRun& run, SensingMode mode);

struct MultiplexingGain {
    SensitivityReport sequential;
    SensitivityReport multiplexed;
    double ratio = 0.0;  // sequential combined eta / multiplexed combined eta
};

MultiplexingGain compare_multiplexing(const ProbePair& probe, const RamseyConfig& cfg, const SensitivityRun& run);

}  // namespace nvmux
