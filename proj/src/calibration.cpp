#include "nvmux/calibration.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "nvmux/fields.hpp"

namespace nvmux {
namespace {

constexpr std::size_t kParams = 5;  // theta, phi, z, x_edge, y_edge
using Params = std::array<double, kParams>;

struct Observation {
    ScanAxis axis;
    double position_nm;
    double shift_mhz;  // f+ - D0 or D0 - f-
};

struct SensorProblem {
    const EdgeSample* sample;
    std::vector<Observation> obs;

    double model(const Params& p, const Observation& o) const {
        const double edge = o.axis == ScanAxis::X ? p[3] : p[4];
        return edge_shift_mhz(SensorAxis(p[0], p[1]), *sample, o.axis, o.position_nm - edge, p[2]);
    }
    double cost(const Params& p) const {
        if (!(p[2] > 0.5) || !std::isfinite(p[0]) || !std::isfinite(p[1])) return 1e300;
        double sum = 0.0;
        for (const auto& o : obs) {
            const double r = o.shift_mhz - model(p, o);
            sum += r * r;
        }
        return sum;
    }
};

Params to_params(const gsl_vector* v) {
    Params p{};
    for (std::size_t i = 0; i < kParams; ++i) p[i] = gsl_vector_get(v, i);
    return p;
}

double cost_cb(const gsl_vector* v, void* ctx) {
    return static_cast<const SensorProblem*>(ctx)->cost(to_params(v));
}

int residual_cb(const gsl_vector* v, void* ctx, gsl_vector* f) {
    const auto* prob = static_cast<const SensorProblem*>(ctx);
    Params p = to_params(v);
    if (!(p[2] > 0.0)) p[2] = 1e-3;
    for (std::size_t i = 0; i < prob->obs.size(); ++i) {
        gsl_vector_set(f, i, prob->obs[i].shift_mhz - prob->model(p, prob->obs[i]));
    }
    return GSL_SUCCESS;
}

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct SimplexDeleter {
    void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct LsqDeleter {
    void operator()(gsl_multifit_nlinear_workspace* w) const { gsl_multifit_nlinear_free(w); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

VectorPtr make_vector(const Params& p) {
    VectorPtr v(gsl_vector_alloc(kParams));
    for (std::size_t i = 0; i < kParams; ++i) gsl_vector_set(v.get(), i, p[i]);
    return v;
}

struct Solution {
    Params params{};
    double cost = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

Solution simplex(const SensorProblem& prob, Params start, const FitOptions& opts) {
    gsl_multimin_function fn{&cost_cb, kParams, const_cast<SensorProblem*>(&prob)};
    std::unique_ptr<gsl_multimin_fminimizer, SimplexDeleter> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, kParams));
    const VectorPtr step = make_vector({5.0, 10.0, 10.0, 20.0, 20.0});

    Solution best{start, prob.cost(start), 0, false};
    const std::size_t budget = opts.max_iterations;
    for (std::size_t round = 0; round <= opts.restarts && best.iterations < budget; ++round) {
        const VectorPtr x = make_vector(best.params);
        gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());
        bool converged = false;
        while (best.iterations < budget) {
            ++best.iterations;
            if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), 1e-7) == GSL_SUCCESS) {
                converged = true;
                break;
            }
        }
        const double c = gsl_multimin_fminimizer_minimum(s.get());
        const double previous = best.cost;
        if (c <= best.cost) {
            best.params = to_params(gsl_multimin_fminimizer_x(s.get()));
            best.cost = c;
        }
        best.converged = converged;
        // A restart that no longer improves the minimum ends the search.
        if (converged && round > 0 && previous - c <= 1e-12 * (1.0 + previous)) break;
    }
    return best;
}

bool least_squares(const SensorProblem& prob, Solution& sol) {
    gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
    std::unique_ptr<gsl_multifit_nlinear_workspace, LsqDeleter> w(
        gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, prob.obs.size(), kParams));
    gsl_multifit_nlinear_fdf fdf{};
    fdf.f = &residual_cb;
    fdf.df = nullptr;
    fdf.fvv = nullptr;
    fdf.n = prob.obs.size();
    fdf.p = kParams;
    fdf.params = const_cast<SensorProblem*>(&prob);

    const VectorPtr x = make_vector(sol.params);
    if (gsl_multifit_nlinear_init(x.get(), &fdf, w.get()) != GSL_SUCCESS) return false;
    int info = 0;
    const int status = gsl_multifit_nlinear_driver(200, 1e-10, 1e-10, 1e-12, nullptr, nullptr, &info, w.get());
    const Params p = to_params(gsl_multifit_nlinear_position(w.get()));
    const double c = prob.cost(p);
    if (c <= sol.cost) {
        sol.params = p;
        sol.cost = c;
    }
    sol.iterations += gsl_multifit_nlinear_niter(w.get());
    return status == GSL_SUCCESS;
}

// Sign-fold the fitted axis toward `reference` and return canonical angles.
std::array<double, 2> canonical_angles(double theta, double phi, const Vec3& reference) {
    Vec3 e = SensorAxis(theta, phi).unit();
    if (e.dot(reference) < 0.0) e = -e;
    const SensorAxis a = SensorAxis::from_vector(e);
    return {a.theta_deg(), a.phi_deg()};
}

double wrap_deg(double d) { return std::remainder(d, 360.0); }

SensorProblem build_problem(const EdgeScan& x_scan, const EdgeScan& y_scan, std::size_t sensor,
                            const EdgeSample& sample) {
    SensorProblem prob{&sample, {}};
    for (const EdgeScan* scan : {&x_scan, &y_scan}) {
        for (std::size_t i = 0; i < scan->position_nm.size(); ++i) {
            const auto& f = scan->freq_mhz[i];
            prob.obs.push_back({scan->axis, scan->position_nm[i], sample.d0_mhz - f[2 * sensor]});
            prob.obs.push_back({scan->axis, scan->position_nm[i], f[2 * sensor + 1] - sample.d0_mhz});
        }
    }
    return prob;
}

void require_edge_inside(const EdgeScan& scan, const char* name) {
    const std::size_t n = scan.position_nm.size();
    if (n < 5 || scan.freq_mhz.size() != n) {
        throw InvalidArgument(std::string(name) + " scan needs at least 5 points with four frequencies each");
    }
    for (std::size_t sensor = 0; sensor < 2; ++sensor) {
        auto split = [&](std::size_t i) { return scan.freq_mhz[i][2 * sensor + 1] - scan.freq_mhz[i][2 * sensor]; };
        const double baseline = 0.5 * (split(0) + split(n - 1));
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(split(i) - baseline);
            if (d > best) {
                best = d;
                arg = i;
            }
        }
        if (arg == 0 || arg == n - 1) {
            throw InvalidArgument(std::string(name) + " scan does not span the edge feature of sensor " +
                                  std::to_string(sensor + 1));
        }
    }
}

double golden_extremum(double lo, double hi, double sign, double z) {
    auto f = [&](double x) { return sign * x / (x * x + z * z); };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    for (int it = 0; it < 200 && b - a > 1e-12 * z; ++it) {
        if (f(c) > f(d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    return 0.5 * (a + b);
}

void put_value(std::ostream& os, const char* key, const ValueSigma& v) {
    char buf[96];
    if (v.sigma) {
        std::snprintf(buf, sizeof buf, "%s = %.9g ± %.9g\n", key, v.value, *v.sigma);
    } else {
        std::snprintf(buf, sizeof buf, "%s = %.9g\n", key, v.value);
    }
    os << buf;
}

}  // namespace

double edge_shift_mhz(const SensorAxis& axis, const EdgeSample& sample, ScanAxis scan, double offset_nm,
                      double z_nm) {
    StripeEdge edge;
    edge.edge_position_nm = 0.0;
    edge.edge_normal = scan == ScanAxis::X ? Vec3::UnitX() : Vec3::UnitY();
    edge.sheet_moment_t_nm = sample.sheet_moment_t_nm;
    edge.magnetization_sign = sample.magnetization_sign;
    const Vec3 r = offset_nm * edge.edge_normal + z_nm * Vec3::UnitZ();
    const Vec3 b = edge_field(edge, r) + sample.bias_t;
    return sample.gamma / (2.0 * std::numbers::pi) * std::abs(axis.unit().dot(b)) * 1e-6;
}

double edge_feature_width(double z_nm) {
    if (!(z_nm > 0.0)) throw OutOfDomain("standoff must be positive");
    // Bz ~ -x / (x^2 + z^2): maximum on the negative side, minimum on the positive side.
    const double x_max = golden_extremum(-20.0 * z_nm, 0.0, -1.0, z_nm);
    const double x_min = golden_extremum(0.0, 20.0 * z_nm, 1.0, z_nm);
    return x_min - x_max;
}

EdgeScan simulate_edge_scan(const ProbePair& probe, const EdgeSample& sample, ScanAxis axis,
                            std::span<const double> positions_nm, double noise_mhz, Rng& rng) {
    if (!(noise_mhz >= 0.0)) throw InvalidArgument("frequency noise must be >= 0");
    EdgeScan scan;
    scan.axis = axis;
    std::normal_distribution<double> noise(0.0, noise_mhz > 0.0 ? noise_mhz : 1.0);
    for (double p : positions_nm) {
        std::array<double, 4> f{};
        for (std::size_t s = 0; s < 2; ++s) {
            const NvSensor& sensor = probe[s];
            const double along = axis == ScanAxis::X ? sensor.position_nm.x() : sensor.position_nm.y();
            const double edge = axis == ScanAxis::X ? sample.x_edge_nm : sample.y_edge_nm;
            const double shift = edge_shift_mhz(sensor.axis, sample, axis, p + along - edge, sensor.position_nm.z());
            f[2 * s] = sample.d0_mhz - shift;
            f[2 * s + 1] = sample.d0_mhz + shift;
        }
        if (noise_mhz > 0.0) {
            for (double& v : f) v += noise(rng);
        }
        scan.position_nm.push_back(p);
        scan.freq_mhz.push_back(f);
    }
    return scan;
}

ProbeFitResult fit_probe_geometry(const EdgeScan& x_scan, const EdgeScan& y_scan,
                                  const std::array<SensorGuess, 2>& guess, const EdgeSample& sample,
                                  const FitOptions& opts) {
    gsl_set_error_handler_off();
    if (x_scan.axis != ScanAxis::X || y_scan.axis != ScanAxis::Y) {
        throw InvalidArgument("expected one scan across the x edge and one across the y edge");
    }
    require_edge_inside(x_scan, "x-edge");
    require_edge_inside(y_scan, "y-edge");

    ProbeFitResult result;
    result.converged = true;
    double residual2 = 0.0, signal2 = 0.0;
    std::array<Solution, 2> solutions;

    for (std::size_t s = 0; s < 2; ++s) {
        const SensorProblem prob = build_problem(x_scan, y_scan, s, sample);
        const Params start{guess[s].theta_deg, guess[s].phi_deg, guess[s].z_nm, guess[s].x_edge_nm,
                           guess[s].y_edge_nm};
        Solution sol = simplex(prob, start, opts);
        bool ok = sol.converged;
        if (opts.refine) ok = least_squares(prob, sol) || ok;
        solutions[s] = sol;
        result.iterations += sol.iterations;
        result.converged = result.converged && ok;

        const Vec3 reference = SensorAxis(guess[s].theta_deg, guess[s].phi_deg).unit();
        const auto angles = canonical_angles(sol.params[0], sol.params[1], reference);
        SensorFit& fit = result.sensors[s];
        fit.theta_deg.value = angles[0];
        fit.phi_deg.value = angles[1];
        fit.z_nm.value = sol.params[2];
        fit.x_edge_nm.value = sol.params[3];
        fit.y_edge_nm.value = sol.params[4];
        fit.residual_rms_mhz = std::sqrt(sol.cost / static_cast<double>(prob.obs.size()));
        fit.feature_width_nm = edge_feature_width(sol.params[2]);
        residual2 += sol.cost;
        for (const auto& o : prob.obs) signal2 += o.shift_mhz * o.shift_mhz;

        if (opts.bootstrap > 0) {
            std::vector<double> model(prob.obs.size()), resid(prob.obs.size());
            for (std::size_t i = 0; i < prob.obs.size(); ++i) {
                model[i] = prob.model(sol.params, prob.obs[i]);
                resid[i] = prob.obs[i].shift_mhz - model[i];
            }
            Rng rng = make_stream(opts.seed, s, 3);
            std::uniform_int_distribution<std::size_t> pick(0, resid.size() - 1);
            const Vec3 fitted_axis = SensorAxis(angles[0], angles[1]).unit();
            std::array<double, kParams> sum{}, sum2{};
            FitOptions inner = opts;
            inner.restarts = 0;
            for (std::size_t b = 0; b < opts.bootstrap; ++b) {
                SensorProblem resampled = prob;
                for (std::size_t i = 0; i < resampled.obs.size(); ++i) {
                    resampled.obs[i].shift_mhz = model[i] + resid[pick(rng)];
                }
                Solution bs{sol.params, resampled.cost(sol.params), 0, false};
                if (!least_squares(resampled, bs)) bs = simplex(resampled, sol.params, inner);
                const auto a = canonical_angles(bs.params[0], bs.params[1], fitted_axis);
                const Params d{a[0] - angles[0], wrap_deg(a[1] - angles[1]), bs.params[2] - sol.params[2],
                               bs.params[3] - sol.params[3], bs.params[4] - sol.params[4]};
                for (std::size_t k = 0; k < kParams; ++k) {
                    sum[k] += d[k];
                    sum2[k] += d[k] * d[k];
                }
            }
            const double n = static_cast<double>(opts.bootstrap);
            auto sd = [&](std::size_t k) {
                const double mean = sum[k] / n;
                return std::sqrt(std::max(0.0, sum2[k] / n - mean * mean));
            };
            fit.theta_deg.sigma = sd(0);
            fit.phi_deg.sigma = sd(1);
            fit.z_nm.sigma = sd(2);
            fit.x_edge_nm.sigma = sd(3);
            fit.y_edge_nm.sigma = sd(4);
        }
    }

    const auto& a = result.sensors[0];
    const auto& b = result.sensors[1];
    auto diff = [](const ValueSigma& first, const ValueSigma& second, double value) {
        ValueSigma v{value, std::nullopt};
        if (first.sigma && second.sigma) v.sigma = std::hypot(*first.sigma, *second.sigma);
        return v;
    };
    // A sensor offset by +d along x meets the edge d earlier in apex coordinates.
    result.dx_nm = diff(a.x_edge_nm, b.x_edge_nm, a.x_edge_nm.value - b.x_edge_nm.value);
    result.dy_nm = diff(a.y_edge_nm, b.y_edge_nm, a.y_edge_nm.value - b.y_edge_nm.value);
    result.dz_nm = diff(a.z_nm, b.z_nm, b.z_nm.value - a.z_nm.value);
    result.residual_norm_mhz = std::sqrt(residual2);
    result.signal_norm_mhz = std::sqrt(signal2);

    if (!result.converged) {
        throw FitFailure("probe geometry fit did not converge after " + std::to_string(result.iterations) +
                             " iterations (residual rms " + std::to_string(result.sensors[0].residual_rms_mhz) +
                             ", " + std::to_string(result.sensors[1].residual_rms_mhz) + " MHz)",
                         result);
    }
    return result;
}

void write_fit_report(std::ostream& os, const ProbeFitResult& fit) {
    const char* keys[2][6] = {{"theta1_deg", "phi1_deg", "z1_nm", "x_edge1_nm", "y_edge1_nm", "feature_width1_nm"},
                              {"theta2_deg", "phi2_deg", "z2_nm", "x_edge2_nm", "y_edge2_nm", "feature_width2_nm"}};
    for (std::size_t s = 0; s < 2; ++s) {
        const auto& f = fit.sensors[s];
        put_value(os, keys[s][0], f.theta_deg);
        put_value(os, keys[s][1], f.phi_deg);
        put_value(os, keys[s][2], f.z_nm);
        put_value(os, keys[s][3], f.x_edge_nm);
        put_value(os, keys[s][4], f.y_edge_nm);
        put_value(os, keys[s][5], {f.feature_width_nm, std::nullopt});
    }
    put_value(os, "dx_nm", fit.dx_nm);
    put_value(os, "dy_nm", fit.dy_nm);
    put_value(os, "dz_nm", fit.dz_nm);
    put_value(os, "residual_norm_mhz", {fit.residual_norm_mhz, std::nullopt});
    put_value(os, "signal_norm_mhz", {fit.signal_norm_mhz, std::nullopt});
    os << "iterations = " << fit.iterations << "\n";
    os << "converged = " << (fit.converged ? "true" : "false") << "\n";
}

void write_fit_residuals(std::ostream& os, const EdgeScan& x_scan, const EdgeScan& y_scan,
                         const ProbeFitResult& fit, const EdgeSample& sample) {
    os << "scan,position_nm,sensor,branch,observed_mhz,model_mhz,residual_mhz\n";
    char buf[160];
    for (const EdgeScan* scan : {&x_scan, &y_scan}) {
        const char* name = scan->axis == ScanAxis::X ? "x" : "y";
        for (std::size_t i = 0; i < scan->position_nm.size(); ++i) {
            for (std::size_t s = 0; s < 2; ++s) {
                const auto& f = fit.sensors[s];
                const double edge = scan->axis == ScanAxis::X ? f.x_edge_nm.value : f.y_edge_nm.value;
                const double shift = edge_shift_mhz(SensorAxis(f.theta_deg.value, f.phi_deg.value), sample,
                                                    scan->axis, scan->position_nm[i] - edge, f.z_nm.value);
                const double model[2] = {sample.d0_mhz - shift, sample.d0_mhz + shift};
                for (std::size_t br = 0; br < 2; ++br) {
                    const double obs = scan->freq_mhz[i][2 * s + br];
                    std::snprintf(buf, sizeof buf, "%s,%.9g,%zu,%s,%.9g,%.9g,%.9g\n", name, scan->position_nm[i],
                                  s + 1, br ? "+" : "-", obs, model[br], obs - model[br]);
                    os << buf;
                }
            }
        }
    }
}

}  // namespace nvmux
