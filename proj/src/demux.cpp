#include "nvmux/demux.hpp"

#include <cmath>
#include <numbers>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

using RP = ReadoutPhase;

double principal(double phi) {
    return phi <= -std::numbers::pi ? phi + 2.0 * std::numbers::pi : phi;
}

// Variance of a per-shot rate estimated from a Poisson total.
double rate_variance(const CountCell& c) {
    const double s = static_cast<double>(c.shots);
    return c.total / (s * s);
}

struct Quadratures {
    double d_cos = 0.0;
    double d_sin = 0.0;
    double var_cos = 0.0;
    double var_sin = 0.0;
    double scale = 0.0;
};

void accumulate(Quadratures& q, const CountMatrix& m, ReadoutCombo c, RP readout) {
    const CountCell& cell = m.at(c);
    const double r = cell.total / static_cast<double>(cell.shots);
    const double v = rate_variance(cell);
    q.scale += r;
    switch (readout) {
        case RP::PlusX: q.d_cos -= r; q.var_cos += v; break;
        case RP::MinusX: q.d_cos += r; q.var_cos += v; break;
        case RP::PlusY: q.d_sin += r; q.var_sin += v; break;
        case RP::MinusY: q.d_sin -= r; q.var_sin += v; break;
    }
}

// Sign s(Phi) with which the readout enters the rate: rate ~ (c_r / 2) s q(phi),
// q = cos for x readouts and sin for y readouts.
double quadrature_sign(RP p) {
    return (p == RP::MinusX || p == RP::PlusY) ? 1.0 : -1.0;
}

CovarianceTerm covariance_term(const MomentMatrix& mm, RP plus1, RP minus1, RP plus2, RP minus2,
                               double norm) {
    auto vme = [&](RP a, RP b) {
        const auto& cell = mm.at(ReadoutCombo{a, b});
        return cell.variance() - cell.mean();
    };
    auto var = [&](RP a, RP b) {
        const double s = mm.at(ReadoutCombo{a, b}).sigma_v_minus_e();
        return s * s;
    };
    const double sign_p2 = quadrature_sign(plus2);
    CovarianceTerm t;
    t.form_a = quadrature_sign(plus1) * sign_p2 * (vme(plus1, plus2) - vme(plus1, minus2)) / norm;
    t.form_b = quadrature_sign(minus1) * sign_p2 * (vme(minus1, plus2) - vme(minus1, minus2)) / norm;
    t.sigma_a = std::sqrt(var(plus1, plus2) + var(plus1, minus2)) / norm;
    t.sigma_b = std::sqrt(var(minus1, plus2) + var(minus1, minus2)) / norm;
    t.value = 0.5 * (t.form_a + t.form_b);
    t.sigma = 0.5 * std::hypot(t.sigma_a, t.sigma_b);
    return t;
}

std::size_t pow4(int n) {
    std::size_t p = 1;
    for (int i = 0; i < n; ++i) p *= 4;
    return p;
}

}  // namespace

PartialSums partial_sums(const CountMatrix& counts) {
    if (!counts.complete()) throw IncompleteMatrix("partial sums need all sixteen combinations");
    PartialSums ps;
    for (auto combo : sixteen_schedule()) {
        const double t = counts.at(combo).total;
        ps.first[static_cast<std::size_t>(combo.first)] += t;
        ps.second[static_cast<std::size_t>(combo.second)] += t;
    }
    return ps;
}

PhaseEstimate phase_from_quadratures(double d_cos, double d_sin, double var_cos, double var_sin,
                                     double cells_per_side, double scale) {
    const double r2 = d_cos * d_cos + d_sin * d_sin;
    const double amplitude = std::sqrt(r2);
    if (amplitude <= 1e-12 * scale || r2 == 0.0) {
        throw IndeterminatePhase("zero readout contrast: both quadratures vanish");
    }
    PhaseEstimate est;
    // The count model puts cos(phi + Phi) with a negative slope into the rate, so
    // R(+y) - R(-y) is +k c_r sin(phi); this fixes the numerator orientation.
    est.phi = principal(std::atan2(d_sin, d_cos));
    est.sigma = std::sqrt(d_cos * d_cos * var_sin + d_sin * d_sin * var_cos) / r2;
    est.contrast = amplitude / cells_per_side;
    return est;
}

std::pair<PhaseEstimate, PhaseEstimate> mean_phases(const CountMatrix& counts) {
    if (!counts.complete()) throw IncompleteMatrix("mean phases need all sixteen combinations");
    Quadratures q1, q2;
    for (auto combo : sixteen_schedule()) {
        accumulate(q1, counts, combo, combo.first);
        accumulate(q2, counts, combo, combo.second);
    }
    return {phase_from_quadratures(q1.d_cos, q1.d_sin, q1.var_cos, q1.var_sin, 4.0, q1.scale),
            phase_from_quadratures(q2.d_cos, q2.d_sin, q2.var_cos, q2.var_sin, 4.0, q2.scale)};
}

std::pair<PhaseEstimate, PhaseEstimate> demux_eight(const CountMatrix& counts) {
    for (auto combo : eight_schedule()) {
        if (!counts.has(combo)) throw IncompleteMatrix("reduced schedule lacks " + combo.label());
    }
    Quadratures q1, q2;
    for (auto p : kReadoutPhases) {
        accumulate(q1, counts, ReadoutCombo{p, RP::PlusX}, p);
        accumulate(q2, counts, ReadoutCombo{RP::PlusX, p}, p);
    }
    return {phase_from_quadratures(q1.d_cos, q1.d_sin, q1.var_cos, q1.var_sin, 1.0, q1.scale),
            phase_from_quadratures(q2.d_cos, q2.d_sin, q2.var_cos, q2.var_sin, 1.0, q2.scale)};
}

bool CovarianceEstimate::out_of_range() const {
    for (const auto* t : {&xx, &xy, &yx, &yy}) {
        if (std::abs(t->value) > 1.0) return true;
    }
    return false;
}

CovarianceEstimate covariances(const MomentMatrix& moments, double c_r1, double c_r2) {
    if (!(c_r1 > 0.0) || !(c_r2 > 0.0) || !std::isfinite(c_r1) || !std::isfinite(c_r2)) {
        throw InvalidContrast("readout contrasts must be positive");
    }
    if (!moments.complete()) throw IncompleteMatrix("covariances need all sixteen combinations");
    const double norm = c_r1 * c_r2;
    CovarianceEstimate est;
    est.xx = covariance_term(moments, RP::PlusX, RP::MinusX, RP::PlusX, RP::MinusX, norm);
    est.xy = covariance_term(moments, RP::PlusX, RP::MinusX, RP::PlusY, RP::MinusY, norm);
    est.yx = covariance_term(moments, RP::PlusY, RP::MinusY, RP::PlusX, RP::MinusX, norm);
    est.yy = covariance_term(moments, RP::PlusY, RP::MinusY, RP::PlusY, RP::MinusY, norm);
    return est;
}

CorrelatedCovariance covariance_of_correlated_phase(const CovarianceEstimate& cov, double phi1,
                                                    double phi2) {
    if (std::abs(phi1) < 0.05 && std::abs(phi2) < 0.05) return {cov.yy.value, cov.yy.sigma};
    const double c1 = std::cos(phi1), s1 = std::sin(phi1);
    const double c2 = std::cos(phi2), s2 = std::sin(phi2);
    // (cos, sin) of each total phase is the fluctuation's (cos, sin) rotated by
    // the mean phase; this applies the inverse rotation on both sides.
    const double w_yy = c1 * c2, w_xx = s1 * s2, w_xy = -s1 * c2, w_yx = -c1 * s2;
    CorrelatedCovariance out;
    out.value = w_yy * cov.yy.value + w_xx * cov.xx.value + w_xy * cov.xy.value + w_yx * cov.yx.value;
    out.sigma = std::sqrt(w_yy * w_yy * cov.yy.sigma * cov.yy.sigma + w_xx * w_xx * cov.xx.sigma * cov.xx.sigma +
                          w_xy * w_xy * cov.xy.sigma * cov.xy.sigma + w_yx * w_yx * cov.yx.sigma * cov.yx.sigma);
    return out;
}

std::vector<std::vector<ReadoutPhase>> n_sensor_schedule(int n_sensors) {
    if (n_sensors < 1 || n_sensors > 6) throw ScheduleSize("sensor count must be between 1 and 6");
    const std::size_t size = pow4(n_sensors);
    std::vector<std::vector<ReadoutPhase>> out(size, std::vector<ReadoutPhase>(static_cast<std::size_t>(n_sensors)));
    for (std::size_t i = 0; i < size; ++i) {
        std::size_t d = i;
        for (int s = n_sensors - 1; s >= 0; --s) {
            out[i][static_cast<std::size_t>(s)] = static_cast<ReadoutPhase>(d % 4);
            d /= 4;
        }
    }
    return out;
}

std::vector<PhaseEstimate> n_sensor_mean_phases(const NSensorCounts& counts) {
    const auto schedule = n_sensor_schedule(counts.n_sensors);
    if (counts.totals.size() != schedule.size()) {
        throw IncompleteMatrix("expected " + std::to_string(schedule.size()) + " readout totals");
    }
    if (counts.n == 0) throw InvalidArgument("repetitions per combination must be >= 1");
    const double n = static_cast<double>(counts.n);
    const double per_side = static_cast<double>(schedule.size() / 4);

    std::vector<PhaseEstimate> out;
    for (int s = 0; s < counts.n_sensors; ++s) {
        Quadratures q;
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            const double r = counts.totals[i] / n;
            const double v = counts.totals[i] / (n * n);
            q.scale += r;
            switch (schedule[i][static_cast<std::size_t>(s)]) {
                case RP::PlusX: q.d_cos -= r; q.var_cos += v; break;
                case RP::MinusX: q.d_cos += r; q.var_cos += v; break;
                case RP::PlusY: q.d_sin += r; q.var_sin += v; break;
                case RP::MinusY: q.d_sin -= r; q.var_sin += v; break;
            }
        }
        out.push_back(phase_from_quadratures(q.d_cos, q.d_sin, q.var_cos, q.var_sin, per_side, q.scale));
    }
    return out;
}

}  // namespace nvmux
