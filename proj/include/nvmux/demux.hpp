#pragma once

#include <array>
#include <utility>
#include <vector>

#include "nvmux/readout.hpp"

namespace nvmux {

struct PhaseEstimate {
    double phi = 0.0;       // radians, (-pi, pi]
    double sigma = 0.0;     // Poisson-propagated standard error
    double contrast = 0.0;  // fitted readout contrast c_r, photons per shot
};

/// Row sums C_{Phi1} and column sums C_{Phi2}, both in (+x, +y, -x, -y) order.
struct PartialSums {
    std::array<double, 4> first{};
    std::array<double, 4> second{};
};

PartialSums partial_sums(const CountMatrix& counts);

/// Phase from the two quadrature differences
///   d_cos = R(-x) - R(+x) = k c_r cos(phi),  d_sin = R(+y) - R(-y) = k c_r sin(phi)
/// where R are per-shot rates summed over `k` cells per side.
PhaseEstimate phase_from_quadratures(double d_cos, double d_sin, double var_cos, double var_sin,
                                     double cells_per_side, double scale);

/// Mean phases of both sensors from the full sixteen-cell matrix.
std::pair<PhaseEstimate, PhaseEstimate> mean_phases(const CountMatrix& counts);

/// Mean phases from the reduced eight-slot subset {(Phi1, +x)} u {(+x, Phi2)}.
std::pair<PhaseEstimate, PhaseEstimate> demux_eight(const CountMatrix& counts);

struct CovarianceTerm {
    double value = 0.0;  // mean of the two estimator forms
    double sigma = 0.0;
    double form_a = 0.0;  // first sensor read along the + axis
    double form_b = 0.0;  // first sensor read along the - axis
    double sigma_a = 0.0;
    double sigma_b = 0.0;
};

/// Count covariances normalized by c_r1 c_r2. The first index is sensor 1,
/// x stands for cos(phi) and y for sin(phi): xy = Cov(cos phi1, sin phi2).
struct CovarianceEstimate {
    CovarianceTerm xx, xy, yx, yy;

    /// Any entry outside [-1, 1]; estimates are never clamped.
    bool out_of_range() const;
};

CovarianceEstimate covariances(const MomentMatrix& moments, double c_r1, double c_r2);

struct CorrelatedCovariance {
    double value = 0.0;
    double sigma = 0.0;
};

/// Cov(sin phi_c, sin m phi_c) recovered from all four count covariances by
/// undoing the rotation by the mean phases. Near zero mean phases (both
/// |phi| < 0.05 rad) it is cov_yy itself.
CorrelatedCovariance covariance_of_correlated_phase(const CovarianceEstimate& cov, double phi1,
                                                    double phi2);

/// Full factorial schedule for N sensors (1 <= N <= 6), sensor 0 most significant.
std::vector<std::vector<ReadoutPhase>> n_sensor_schedule(int n_sensors);

std::vector<PhaseEstimate> n_sensor_mean_phases(const NSensorCounts& counts);

}  // namespace nvmux
