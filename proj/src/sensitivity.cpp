#include "nvmux/sensitivity.hpp"

#include <cmath>
#include <limits>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

// One sensor read alone: four readouts of `shots` each, other sensor idle.
PhaseEstimate single_sensor_readout(const ProbePair& probe, std::size_t sensor, double tau_s, double phase,
                                    std::uint64_t shots, Rng& rng) {
    const double background = idle_rate(probe[1 - sensor]);
    const double n = static_cast<double>(shots);
    std::array<double, 4> rate{};
    std::array<double, 4> var{};
    double scale = 0.0;
    for (auto p : kReadoutPhases) {
        const double mean = n * (sensor_rate(probe[sensor], tau_s, phase, p) + background);
        const double total = static_cast<double>(poisson_draw(mean, rng));
        rate[static_cast<std::size_t>(p)] = total / n;
        var[static_cast<std::size_t>(p)] = total / (n * n);
        scale += total / n;
    }
    using RP = ReadoutPhase;
    auto at = [](const auto& a, RP p) { return a[static_cast<std::size_t>(p)]; };
    return phase_from_quadratures(at(rate, RP::MinusX) - at(rate, RP::PlusX), at(rate, RP::PlusY) - at(rate, RP::MinusY),
                                  at(var, RP::MinusX) + at(var, RP::PlusX), at(var, RP::PlusY) + at(var, RP::MinusY),
                                  1.0, scale);
}

double wrapped_difference(double a, double b) { return std::remainder(a - b, 2.0 * std::numbers::pi); }

}  // namespace

double combine_inverse_variance(std::span<const double> etas) {
    double w = 0.0;
    for (double e : etas) {
        if (std::isfinite(e) && e > 0.0) w += 1.0 / (e * e);
    }
    return w > 0.0 ? 1.0 / std::sqrt(w) : std::numeric_limits<double>::infinity();
}

SensitivityReport sensitivity_from_estimates(const std::array<PhaseEstimate, 2>& estimates,
                                             const RamseyConfig& cfg, double measurement_time_s,
                                             SensingMode mode) {
    SensitivityReport r;
    r.mode = mode;
    r.measurement_time_s = measurement_time_s;
    const double k = cfg.gamma * cfg.tau_s;
    for (std::size_t i = 0; i < 2; ++i) {
        r.sigma_phase[i] = estimates[i].sigma;
        r.sigma_field_t[i] = estimates[i].sigma / k;
        r.eta[i] = r.sigma_field_t[i] * std::sqrt(measurement_time_s);
    }
    r.combined_eta = combine_inverse_variance(r.eta);
    return r;
}

SensitivityReport estimate_sensitivity(const ProbePair& probe, const RamseyConfig& cfg,
                                       const SensitivityRun& run, SensingMode mode) {
    cfg.validate();
    if (run.trials == 0) throw InvalidArgument("need at least one trial");
    if (run.budget_shots < 16) throw InvalidArgument("shot budget too small for the readout schedule");
    if (!(probe.first.readout_contrast(cfg.tau_s) > 0.0) || !(probe.second.readout_contrast(cfg.tau_s) > 0.0)) {
        throw IndeterminatePhase("a sensor with zero readout contrast has no phase sensitivity");
    }
    const double shot_time = cfg.tau_s + run.overhead_s;
    const double time = static_cast<double>(run.budget_shots) * shot_time;

    std::array<double, 2> sum_var{}, sum_phi{}, sum_phi2{};
    Rng rng = make_stream(run.seed, mode == SensingMode::Multiplexed ? 1 : 2, 2);
    for (std::size_t t = 0; t < run.trials; ++t) {
        std::array<PhaseEstimate, 2> est;
        if (mode == SensingMode::Multiplexed) {
            RamseyConfig c = cfg;
            c.n = run.budget_shots / 16;
            const auto p = mean_phases(simulate_totals(c, probe, run.phases, rng));
            est = {p.first, p.second};
        } else {
            const std::uint64_t shots = run.budget_shots / 8;
            for (std::size_t i = 0; i < 2; ++i) {
                est[i] = single_sensor_readout(probe, i, cfg.tau_s, run.phases[i], shots, rng);
            }
        }
        for (std::size_t i = 0; i < 2; ++i) {
            sum_var[i] += est[i].sigma * est[i].sigma;
            const double d = wrapped_difference(est[i].phi, run.phases[i]);
            sum_phi[i] += d;
            sum_phi2[i] += d * d;
        }
    }

    const double n = static_cast<double>(run.trials);
    std::array<PhaseEstimate, 2> rms{};
    for (std::size_t i = 0; i < 2; ++i) rms[i].sigma = std::sqrt(sum_var[i] / n);
    SensitivityReport r = sensitivity_from_estimates(rms, cfg, time, mode);
    if (run.trials >= 2) {
        for (std::size_t i = 0; i < 2; ++i) {
            const double mean = sum_phi[i] / n;
            r.empirical_sigma_phase[i] = std::sqrt(std::max(0.0, (sum_phi2[i] - n * mean * mean) / (n - 1.0)));
        }
    }
    return r;
}

MultiplexingGain compare_multiplexing(const ProbePair& probe, const RamseyConfig& cfg, const SensitivityRun& run) {
    MultiplexingGain g;
    g.sequential = estimate_sensitivity(probe, cfg, run, SensingMode::Single);
    g.multiplexed = estimate_sensitivity(probe, cfg, run, SensingMode::Multiplexed);
    g.ratio = g.sequential.combined_eta / g.multiplexed.combined_eta;
    return g;
}

}  // namespace nvmux
