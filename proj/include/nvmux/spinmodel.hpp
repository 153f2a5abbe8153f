#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "nvmux/probe.hpp"
#include "nvmux/random.hpp"
#include "nvmux/readout.hpp"

namespace nvmux {

/// NV gyromagnetic ratio, rad / (s T).
inline constexpr double kGammaNv = 2.0 * std::numbers::pi * 28e9;

struct RamseyConfig {
    double tau_s = 250e-9;
    std::uint64_t n = 1;  // repetitions per phase combination
    double gamma = kGammaNv;

    void validate() const;
};

using PhasePair = std::array<double, 2>;

/// gamma * tau * B.
double accumulate_phase(const RamseyConfig& cfg, double b_projected_t);

/// Mean photons per shot from one driven sensor at phase `phase` read out along `readout`:
/// c (1 - eps/2 [1 + exp(-zeta) cos(phase + Phi)]).
double sensor_rate(const NvSensor& sensor, double tau_s, double phase, ReadoutPhase readout);

/// Mean photons per shot from a sensor that is not driven (stays in m_S = 0).
inline double idle_rate(const NvSensor& sensor) { return sensor.photon_yield; }

/// Expected photon total after n repetitions of one combination.
double expected_counts(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases,
                       ReadoutCombo combo);

/// N-sensor form of expected_counts; `combo` holds one readout phase per sensor.
double expected_counts(const RamseyConfig& cfg, std::span<const NvSensor> sensors,
                       std::span<const double> phases, std::span<const ReadoutPhase> combo);

/// Noiseless 16-cell matrix of expected totals.
CountMatrix expected_matrix(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases);

/// Per-shot phase pair: mean phases, plus any number of arcsine terms
/// (one uniformly random u per term, shared by both sensors, contributing
/// amplitude_i * sin(u)), plus independent zero-mean Gaussian noise per sensor.
class PhaseSampler {
public:
    using ArcsineTerm = std::array<double, 2>;

    PhaseSampler() = default;
    PhaseSampler(PhasePair mean, std::vector<ArcsineTerm> arcsine_terms,
                 std::array<double, 2> uncorrelated_sigma);

    static PhaseSampler fixed(PhasePair mean) { return PhaseSampler(mean, {}, {0.0, 0.0}); }

    PhasePair draw(Rng& rng) const;
    bool is_static() const noexcept { return static_; }

    const PhasePair& mean() const noexcept { return mean_; }
    const std::vector<ArcsineTerm>& arcsine_terms() const noexcept { return terms_; }
    const std::array<double, 2>& uncorrelated_sigma() const noexcept { return sigma_; }

private:
    PhasePair mean_{0.0, 0.0};
    std::vector<ArcsineTerm> terms_;
    std::array<double, 2> sigma_{0.0, 0.0};
    bool static_ = true;
};

/// (phi1_bar + phi_c + u1, phi2_bar + m phi_c + u2) with phi_c arcsine of the
/// given amplitude and u_i ~ N(0, sigma_i^2).
PhaseSampler phase_sampler_from_decomposition(PhasePair mean_phases, double correlated_amplitude,
                                              double m, std::array<double, 2> uncorrelated_sigmas);

/// One Poisson-distributed readout of the summed rate of both sensors.
std::uint64_t sample_count_shot(const RamseyConfig& cfg, const ProbePair& probe,
                                const PhaseSampler& sampler, ReadoutCombo combo, Rng& rng);

/// Runs cfg.n shots for each slot of `schedule`, accumulating per-cell moments.
/// A combination listed twice accumulates 2 n shots.
MomentMatrix simulate_shots(const RamseyConfig& cfg, const ProbePair& probe,
                            const PhaseSampler& sampler, std::span<const ReadoutCombo> schedule,
                            Rng& rng);
MomentMatrix simulate_shots(const RamseyConfig& cfg, const ProbePair& probe,
                            const PhaseSampler& sampler, Rng& rng);

/// Fast path for static phases: one Poisson draw of n * rate per slot.
CountMatrix simulate_totals(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases,
                            std::span<const ReadoutCombo> schedule, Rng& rng);
CountMatrix simulate_totals(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases,
                            Rng& rng);

/// Full 4^N factorial readout of static phases (n_sensor_schedule order).
NSensorCounts simulate_totals_n(const RamseyConfig& cfg, std::span<const NvSensor> sensors,
                                std::span<const double> phases, Rng& rng);
NSensorCounts expected_totals_n(const RamseyConfig& cfg, std::span<const NvSensor> sensors,
                                std::span<const double> phases);

/// Poisson draw; `mean` must be finite and non-negative.
std::uint64_t poisson_draw(double mean, Rng& rng);

}  // namespace nvmux
