#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvmux/errors.hpp"
#include "nvmux/probe.hpp"
#include "nvmux/random.hpp"
#include "nvmux/spinmodel.hpp"

namespace nvmux {

/// Calibration sample: a magnetized film whose straight edges are
/// perpendicular to x (at x_edge_nm) and to y (at y_edge_nm).
struct EdgeSample {
    double sheet_moment_t_nm = 1.2566;  // mu0 Ms t
    int magnetization_sign = 1;
    double x_edge_nm = 0.0;
    double y_edge_nm = 0.0;
    Vec3 bias_t = Vec3::Zero();
    double d0_mhz = 2870.0;
    double gamma = kGammaNv;
};

enum class ScanAxis { X, Y };

/// One line scan across an edge: apex position along the scan axis and the
/// four measured transition frequencies (f1-, f1+, f2-, f2+) at each point.
struct EdgeScan {
    ScanAxis axis = ScanAxis::X;
    std::vector<double> position_nm;
    std::vector<std::array<double, 4>> freq_mhz;
};

EdgeScan simulate_edge_scan(const ProbePair& probe, const EdgeSample& sample, ScanAxis axis,
                            std::span<const double> positions_nm, double noise_mhz, Rng& rng);

/// Starting point for one sensor. x_edge_nm / y_edge_nm are the apex
/// coordinates at which this sensor crosses each edge.
struct SensorGuess {
    double theta_deg = 45.0;
    double phi_deg = 0.0;
    double z_nm = 50.0;
    double x_edge_nm = 0.0;
    double y_edge_nm = 0.0;
};

struct FitOptions {
    std::size_t bootstrap = 100;  // residual resamples; 0 disables uncertainties
    std::size_t max_iterations = 5000;
    std::size_t restarts = 3;
    bool refine = true;  // damped least-squares polish after the simplex
    std::uint64_t seed = 0;
};

struct ValueSigma {
    double value = 0.0;
    std::optional<double> sigma;
};

struct SensorFit {
    ValueSigma theta_deg, phi_deg, z_nm, x_edge_nm, y_edge_nm;
    double residual_rms_mhz = 0.0;
    /// Peak-to-peak width of the out-of-plane edge field at the fitted standoff.
    double feature_width_nm = 0.0;
};

struct ProbeFitResult {
    std::array<SensorFit, 2> sensors;
    ValueSigma dx_nm, dy_nm, dz_nm;
    double residual_norm_mhz = 0.0;
    double signal_norm_mhz = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

class FitFailure : public Error {
public:
    FitFailure(const std::string& what, ProbeFitResult best) : Error(what), best_(std::move(best)) {}
    const ProbeFitResult& best() const noexcept { return best_; }

private:
    ProbeFitResult best_;
};

/// (gamma / 2 pi) |e . (B_bias + B_edge)| in MHz for a sensor at signed
/// distance `offset_nm` from the edge and height z.
double edge_shift_mhz(const SensorAxis& axis, const EdgeSample& sample, ScanAxis scan, double offset_nm,
                      double z_nm);

/// Distance between the extrema of the out-of-plane edge field at height z,
/// located numerically.
double edge_feature_width(double z_nm);

ProbeFitResult fit_probe_geometry(const EdgeScan& x_scan, const EdgeScan& y_scan,
                                  const std::array<SensorGuess, 2>& guess, const EdgeSample& sample,
                                  const FitOptions& opts = {});

void write_fit_report(std::ostream& os, const ProbeFitResult& fit);
void write_fit_residuals(std::ostream& os, const EdgeScan& x_scan, const EdgeScan& y_scan,
                         const ProbeFitResult& fit, const EdgeSample& sample);

}  // namespace nvmux
