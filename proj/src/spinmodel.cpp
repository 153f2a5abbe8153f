#include "nvmux/spinmodel.hpp"

#include <cmath>
#include <stdexcept>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

// Per-shot rate of one sensor split as offset + slope * cos(phase + Phi).
struct RateTerms {
    double offset;
    double slope;
};

RateTerms rate_terms(const NvSensor& s, double tau_s) {
    const double half = 0.5 * s.photon_yield * s.contrast;
    return {s.photon_yield - half, -half * std::exp(-s.dephasing.at(tau_s))};
}

std::size_t pow4(int n) {
    std::size_t p = 1;
    for (int i = 0; i < n; ++i) p *= 4;
    return p;
}

ReadoutPhase digit(std::size_t index, int sensor, int n_sensors) {
    std::size_t d = index;
    for (int i = 0; i < n_sensors - 1 - sensor; ++i) d /= 4;
    return static_cast<ReadoutPhase>(d % 4);
}

// Sequential-search inversion, one uniform per draw. Per-shot means are a few
// photons, where this is much cheaper than the library's product method.
constexpr double kInversionLimit = 30.0;

std::uint64_t poisson_inversion(double mean, double exp_neg_mean, Rng& rng) {
    const double u = uniform01(rng);
    double p = exp_neg_mean;
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && p > 0.0) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

}  // namespace

void RamseyConfig::validate() const {
    if (!(tau_s > 0.0)) throw InvalidArgument("tau must be positive");
    if (n < 1) throw InvalidArgument("repetitions per combination must be >= 1");
    if (!(gamma > 0.0)) throw InvalidArgument("gyromagnetic ratio must be positive");
}

double accumulate_phase(const RamseyConfig& cfg, double b_projected_t) {
    return cfg.gamma * cfg.tau_s * b_projected_t;
}

double sensor_rate(const NvSensor& sensor, double tau_s, double phase, ReadoutPhase readout) {
    const auto t = rate_terms(sensor, tau_s);
    return t.offset + t.slope * std::cos(phase + readout_angle(readout));
}

double expected_counts(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases,
                       ReadoutCombo combo) {
    const double n = static_cast<double>(cfg.n);
    return n * (sensor_rate(probe.first, cfg.tau_s, phases[0], combo.first) +
                sensor_rate(probe.second, cfg.tau_s, phases[1], combo.second));
}

double expected_counts(const RamseyConfig& cfg, std::span<const NvSensor> sensors,
                       std::span<const double> phases, std::span<const ReadoutPhase> combo) {
    if (sensors.size() != phases.size() || sensors.size() != combo.size()) {
        throw InvalidArgument("sensor, phase and readout counts differ");
    }
    double rate = 0.0;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        rate += sensor_rate(sensors[i], cfg.tau_s, phases[i], combo[i]);
    }
    return static_cast<double>(cfg.n) * rate;
}

CountMatrix expected_matrix(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases) {
    CountMatrix m;
    for (auto combo : sixteen_schedule()) m.set(combo, expected_counts(cfg, probe, phases, combo), cfg.n);
    return m;
}

PhaseSampler::PhaseSampler(PhasePair mean, std::vector<ArcsineTerm> arcsine_terms,
                           std::array<double, 2> uncorrelated_sigma)
    : mean_(mean), terms_(std::move(arcsine_terms)), sigma_(uncorrelated_sigma) {
    if (!std::isfinite(mean_[0]) || !std::isfinite(mean_[1])) {
        throw InvalidArgument("mean phases must be finite");
    }
    for (const auto& t : terms_) {
        if (!std::isfinite(t[0]) || !std::isfinite(t[1])) throw InvalidArgument("arcsine amplitudes must be finite");
    }
    if (!(sigma_[0] >= 0.0) || !(sigma_[1] >= 0.0)) {
        throw InvalidArgument("uncorrelated noise widths must be >= 0");
    }
    static_ = sigma_[0] == 0.0 && sigma_[1] == 0.0;
    for (const auto& t : terms_) {
        if (t[0] != 0.0 || t[1] != 0.0) static_ = false;
    }
}

PhasePair PhaseSampler::draw(Rng& rng) const {
    PhasePair p = mean_;
    if (static_) return p;
    for (const auto& t : terms_) {
        const double s = std::sin(2.0 * std::numbers::pi * uniform01(rng));
        p[0] += t[0] * s;
        p[1] += t[1] * s;
    }
    for (std::size_t i = 0; i < 2; ++i) {
        if (sigma_[i] > 0.0) p[i] += std::normal_distribution<double>(0.0, sigma_[i])(rng);
    }
    return p;
}

PhaseSampler phase_sampler_from_decomposition(PhasePair mean_phases, double correlated_amplitude,
                                              double m, std::array<double, 2> uncorrelated_sigmas) {
    if (!std::isfinite(m)) throw InvalidArgument("correlation factor must be finite");
    if (!(correlated_amplitude >= 0.0)) throw InvalidArgument("correlated amplitude must be >= 0");
    std::vector<PhaseSampler::ArcsineTerm> terms;
    if (correlated_amplitude > 0.0) terms.push_back({correlated_amplitude, m * correlated_amplitude});
    return PhaseSampler(mean_phases, std::move(terms), uncorrelated_sigmas);
}

std::uint64_t poisson_draw(double mean, Rng& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::logic_error("negative or non-finite photon rate");
    }
    if (mean == 0.0) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

std::uint64_t sample_count_shot(const RamseyConfig& cfg, const ProbePair& probe,
                                const PhaseSampler& sampler, ReadoutCombo combo, Rng& rng) {
    const PhasePair p = sampler.draw(rng);
    const double rate = sensor_rate(probe.first, cfg.tau_s, p[0], combo.first) +
                        sensor_rate(probe.second, cfg.tau_s, p[1], combo.second);
    return poisson_draw(rate, rng);
}

MomentMatrix simulate_shots(const RamseyConfig& cfg, const ProbePair& probe,
                            const PhaseSampler& sampler, std::span<const ReadoutCombo> schedule,
                            Rng& rng) {
    cfg.validate();
    const RateTerms t1 = rate_terms(probe.first, cfg.tau_s);
    const RateTerms t2 = rate_terms(probe.second, cfg.tau_s);
    const double offset = t1.offset + t2.offset;

    MomentMatrix out;
    std::poisson_distribution<std::uint64_t> poisson;
    using Param = std::poisson_distribution<std::uint64_t>::param_type;

    for (const ReadoutCombo combo : schedule) {
        CellMoments& cell = out.at(combo);
        const double a1 = readout_angle(combo.first);
        const double a2 = readout_angle(combo.second);

        if (sampler.is_static()) {
            const PhasePair p = sampler.mean();
            const double rate = offset + t1.slope * std::cos(p[0] + a1) + t2.slope * std::cos(p[1] + a2);
            if (!(rate >= 0.0)) throw std::logic_error("negative photon rate");
            if (rate == 0.0) {
                for (std::uint64_t s = 0; s < cfg.n; ++s) cell.add(0);
                continue;
            }
            if (rate < kInversionLimit) {
                const double e = std::exp(-rate);
                for (std::uint64_t s = 0; s < cfg.n; ++s) cell.add(poisson_inversion(rate, e, rng));
            } else {
                poisson.param(Param(rate));
                for (std::uint64_t s = 0; s < cfg.n; ++s) cell.add(poisson(rng));
            }
            continue;
        }

        for (std::uint64_t s = 0; s < cfg.n; ++s) {
            const PhasePair p = sampler.draw(rng);
            const double rate = offset + t1.slope * std::cos(p[0] + a1) + t2.slope * std::cos(p[1] + a2);
            if (!(rate >= 0.0)) throw std::logic_error("negative photon rate");
            if (rate == 0.0) {
                cell.add(0);
                continue;
            }
            if (rate < kInversionLimit) {
                cell.add(poisson_inversion(rate, std::exp(-rate), rng));
            } else {
                poisson.param(Param(rate));
                cell.add(poisson(rng));
            }
        }
    }
    return out;
}

MomentMatrix simulate_shots(const RamseyConfig& cfg, const ProbePair& probe,
                            const PhaseSampler& sampler, Rng& rng) {
    const auto schedule = sixteen_schedule();
    return simulate_shots(cfg, probe, sampler, schedule, rng);
}

CountMatrix simulate_totals(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases,
                            std::span<const ReadoutCombo> schedule, Rng& rng) {
    cfg.validate();
    CountMatrix out;
    for (const ReadoutCombo combo : schedule) {
        const double mean = expected_counts(cfg, probe, phases, combo);
        out.add(combo, static_cast<double>(poisson_draw(mean, rng)), cfg.n);
    }
    return out;
}

CountMatrix simulate_totals(const RamseyConfig& cfg, const ProbePair& probe, const PhasePair& phases,
                            Rng& rng) {
    const auto schedule = sixteen_schedule();
    return simulate_totals(cfg, probe, phases, schedule, rng);
}

NSensorCounts expected_totals_n(const RamseyConfig& cfg, std::span<const NvSensor> sensors,
                                std::span<const double> phases) {
    const int n = static_cast<int>(sensors.size());
    if (n < 1 || n > 6) throw ScheduleSize("sensor count must be between 1 and 6");
    NSensorCounts out{n, cfg.n, std::vector<double>(pow4(n))};
    std::vector<ReadoutPhase> combo(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out.totals.size(); ++i) {
        for (int s = 0; s < n; ++s) combo[static_cast<std::size_t>(s)] = digit(i, s, n);
        out.totals[i] = expected_counts(cfg, sensors, phases, combo);
    }
    return out;
}

NSensorCounts simulate_totals_n(const RamseyConfig& cfg, std::span<const NvSensor> sensors,
                                std::span<const double> phases, Rng& rng) {
    NSensorCounts out = expected_totals_n(cfg, sensors, phases);
    for (double& t : out.totals) t = static_cast<double>(poisson_draw(t, rng));
    return out;
}

}  // namespace nvmux
