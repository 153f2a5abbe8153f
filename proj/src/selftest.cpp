#include "nvmux/selftest.hpp"

#include <cmath>
#include <numbers>

#include "nvmux/csv_io.hpp"
#include "nvmux/random.hpp"
#include "nvmux/spinmodel.hpp"

namespace nvmux {
namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

ProbePair bright_probe() {
    ProbePair p;
    for (NvSensor* s : {&p.first, &p.second}) {
        s->photon_yield = 2.0;
        s->contrast = 1.0;
        s->dephasing = Dephasing::fixed(0.05);
    }
    return p;
}

SelfTestCheck round_trip(const PhaseDemux& demux) {
    RamseyConfig cfg;
    cfg.n = 1000;
    const ProbePair probe = bright_probe();
    double worst = 0.0;
    for (int i = -7; i <= 8; ++i) {
        for (int j = -7; j <= 8; ++j) {
            const PhasePair truth{i * kPi / 8.0 - 0.01, j * kPi / 8.0 + 0.02};
            const auto [e1, e2] = demux(expected_matrix(cfg, probe, truth));
            worst = std::max({worst, std::abs(wrap(e1.phi - truth[0])), std::abs(wrap(e2.phi - truth[1]))});
        }
    }
    return {"phase round trip", worst < 1e-9, "max error " + fmt9(worst) + " rad"};
}

SelfTestCheck poisson_variance(std::uint64_t seed) {
    RamseyConfig cfg;
    cfg.n = 20000;
    Rng rng = make_stream(seed, 0, 7);
    const MomentMatrix mm = simulate_shots(cfg, bright_probe(), PhaseSampler::fixed({0.4, -1.1}), rng);
    double worst = 0.0;
    for (const auto& c : mm.cells) worst = std::max(worst, std::abs(c.variance() - c.mean()) / c.sigma_v_minus_e());
    return {"Poisson V = E", worst < 5.0, "max |V - E| / sigma " + fmt9(worst)};
}

SelfTestCheck dual_form(std::uint64_t seed) {
    RamseyConfig cfg;
    cfg.n = 40000;
    const ProbePair probe = bright_probe();
    const double a = 1.2, m = -0.7;
    const PhaseSampler sampler = phase_sampler_from_decomposition({0.0, 0.0}, a, m, {0.0, 0.0});
    Rng rng = make_stream(seed, 1, 7);
    const MomentMatrix mm = simulate_shots(cfg, probe, sampler, rng);
    // True readout contrasts; the fitted ones shrink by J0 of the noise amplitude.
    const CovarianceEstimate cov =
        covariances(mm, probe.first.readout_contrast(cfg.tau_s), probe.second.readout_contrast(cfg.tau_s));

    double worst = 0.0;
    for (const CovarianceTerm* t : {&cov.xx, &cov.xy, &cov.yx, &cov.yy}) {
        worst = std::max(worst, std::abs(t->form_a - t->form_b) / std::hypot(t->sigma_a, t->sigma_b));
    }
    // E[sin(a s) sin(m a s)] over s = sin(u), u uniform
    double expect = 0.0;
    const int steps = 4096;
    for (int k = 0; k < steps; ++k) {
        const double s = std::sin(2.0 * kPi * (k + 0.5) / steps);
        expect += std::sin(a * s) * std::sin(m * a * s) / steps;
    }
    const double pull = std::abs(cov.yy.value - expect) / cov.yy.sigma;
    const bool ok = worst < 5.0 && pull < 5.0;
    return {"covariance dual-form agreement", ok,
            "max |A - B| / sigma " + fmt9(worst) + ", cov_yy pull " + fmt9(pull)};
}

}  // namespace

std::vector<SelfTestCheck> run_selftest(const PhaseDemux& demux, std::uint64_t seed) {
    std::vector<SelfTestCheck> out;
    auto guarded = [&](const char* name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, e.what()});
        }
    };
    guarded("phase round trip", [&] { return round_trip(demux); });
    guarded("Poisson V = E", [&] { return poisson_variance(seed); });
    guarded("covariance dual-form agreement", [&] { return dual_form(seed); });
    return out;
}

}  // namespace nvmux
