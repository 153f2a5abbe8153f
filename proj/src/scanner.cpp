#include "nvmux/scanner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

constexpr double kQuasiStaticLimit = 0.01;

Vec3 sensor_position(const NvSensor& s, const Vec3& apex_nm) { return apex_nm + s.position_nm; }

double attenuation(const PhaseSampler& sampler, std::size_t sensor) {
    double a = std::exp(-0.5 * sampler.uncorrelated_sigma()[sensor] * sampler.uncorrelated_sigma()[sensor]);
    for (const auto& t : sampler.arcsine_terms()) a *= std::cyl_bessel_j(0.0, std::abs(t[sensor]));
    return a;
}

bool has_ac_source(std::span<const FieldSource> sources) {
    for (const auto& s : sources) {
        if (const auto* w = std::get_if<FiniteWire>(&s); w && w->waveform.kind == CurrentWaveform::Kind::AsyncAc) {
            return true;
        }
    }
    return false;
}

PixelResult scan_pixel(const Vec3& apex, std::size_t index, const ProbePair& probe,
                       std::span<const FieldSource> sources, const RamseyConfig& cfg,
                       const ScanOptions& opts, CountMatrix* counts_out, MomentMatrix* moments_out) {
    const PhaseSampler sampler = pixel_sampler(probe, sources, cfg, apex, opts.uncorrelated_sigma);
    Rng rng = make_stream(opts.seed, index);

    std::vector<ReadoutCombo> schedule;
    if (opts.schedule == ScheduleKind::Eight) {
        const auto e = eight_schedule();
        schedule.assign(e.begin(), e.end());
    } else {
        const auto s = sixteen_schedule();
        schedule.assign(s.begin(), s.end());
    }

    PixelResult px;
    px.position_nm = apex;
    CountMatrix counts;
    std::optional<MomentMatrix> moments;

    if (opts.mode == ScanMode::Phases) {
        // Aggregated fast path: one Poisson draw of n times the mean rate per slot.
        for (const auto combo : schedule) {
            const double mean = static_cast<double>(cfg.n) * mean_rate(probe, cfg.tau_s, sampler, combo);
            counts.add(combo, static_cast<double>(poisson_draw(mean, rng)), cfg.n);
        }
    } else {
        moments = simulate_shots(cfg, probe, sampler, schedule, rng);
        counts = moments->counts();
    }
    px.total_counts = counts.grand_total();

    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        const auto phases = opts.schedule == ScheduleKind::Eight ? demux_eight(counts) : mean_phases(counts);
        px.phase1 = phases.first;
        px.phase2 = phases.second;
    } catch (const IndeterminatePhase&) {
        px.phase1 = px.phase2 = PhaseEstimate{nan, nan, 0.0};
    }

    if (moments) {
        double cr1 = probe.first.readout_contrast(cfg.tau_s);
        double cr2 = probe.second.readout_contrast(cfg.tau_s);
        if (opts.contrast_source == ContrastSource::Fitted) {
            cr1 = px.phase1.contrast;
            cr2 = px.phase2.contrast;
        }
        if (cr1 > 0.0 && cr2 > 0.0) {
            px.covariance = covariances(*moments, cr1, cr2);
            px.correlated = covariance_of_correlated_phase(*px.covariance, px.phase1.phi, px.phase2.phi);
        }
    }
    if (counts_out) *counts_out = counts;
    if (moments_out && moments) *moments_out = *moments;
    return px;
}

void put(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << buf;
}

}  // namespace

ScanPath ScanPath::line(const Vec3& start_nm, const Vec3& stop_nm, std::size_t count, std::uint64_t dwell) {
    if (count == 0) throw InvalidArgument("a scan line needs at least one pixel");
    ScanPath p;
    p.dwell = dwell;
    for (std::size_t i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        p.pixels_nm.push_back(start_nm + f * (stop_nm - start_nm));
    }
    p.validate();
    return p;
}

void ScanPath::validate() const {
    if (pixels_nm.empty()) throw InvalidArgument("scan path is empty");
    if (dwell == 0) throw InvalidArgument("dwell must be >= 1");
    for (const auto& p : pixels_nm) {
        if (!p.allFinite()) throw InvalidArgument("scan path has non-finite coordinates");
    }
}

PhaseSampler pixel_sampler(const ProbePair& probe, std::span<const FieldSource> sources,
                           const RamseyConfig& cfg, const Vec3& apex_nm,
                           std::array<double, 2> uncorrelated_sigma) {
    PhasePair mean{0.0, 0.0};
    std::vector<PhaseSampler::ArcsineTerm> terms;
    const std::array<Vec3, 2> at{sensor_position(probe.first, apex_nm), sensor_position(probe.second, apex_nm)};

    for (const auto& src : sources) {
        const auto* wire = std::get_if<FiniteWire>(&src);
        if (wire && wire->waveform.kind == CurrentWaveform::Kind::AsyncAc) {
            PhaseSampler::ArcsineTerm term{};
            for (std::size_t i = 0; i < 2; ++i) {
                const Vec3 b = wire_field_at_current(*wire, at[i], wire->waveform.amplitude_a);
                term[i] = accumulate_phase(cfg, project_field(probe[i].axis, b));
            }
            terms.push_back(term);
            continue;
        }
        for (std::size_t i = 0; i < 2; ++i) {
            mean[i] += accumulate_phase(cfg, project_field(probe[i].axis, source_field(src, at[i], 0.0)));
        }
    }
    return PhaseSampler(mean, std::move(terms), uncorrelated_sigma);
}

double mean_rate(const ProbePair& probe, double tau_s, const PhaseSampler& sampler, ReadoutCombo combo) {
    double rate = 0.0;
    const std::array<ReadoutPhase, 2> readout{combo.first, combo.second};
    for (std::size_t i = 0; i < 2; ++i) {
        const NvSensor& s = probe[i];
        const double half = 0.5 * s.photon_yield * s.contrast;
        const double coherent = std::exp(-s.dephasing.at(tau_s)) * attenuation(sampler, i);
        rate += s.photon_yield - half - half * coherent * std::cos(sampler.mean()[i] + readout_angle(readout[i]));
    }
    return rate;
}

ScanResult run_scan(const ScanPath& path, const ProbePair& probe, std::span<const FieldSource> sources,
                    const RamseyConfig& cfg, const ScanOptions& opts) {
    path.validate();
    cfg.validate();
    probe.first.validate();
    probe.second.validate();
    RamseyConfig pixel_cfg = cfg;
    pixel_cfg.n = path.dwell;

    ScanResult result;
    for (const auto& s : sources) {
        if (const auto* w = std::get_if<FiniteWire>(&s)) {
            w->validate();
            if (w->waveform.kind == CurrentWaveform::Kind::AsyncAc &&
                w->waveform.frequency_hz * cfg.tau_s >= kQuasiStaticLimit) {
                result.warnings.push_back("AC frequency times tau is " +
                                          std::to_string(w->waveform.frequency_hz * cfg.tau_s) +
                                          "; the quasi-static phase model needs f tau < 0.01");
            }
        } else if (const auto* e = std::get_if<StripeEdge>(&s)) {
            e->validate();
        }
    }
    if (opts.mode != ScanMode::Phases) {
        if (opts.schedule == ScheduleKind::Eight) {
            throw InvalidArgument("covariance detection needs the sixteen-combination schedule");
        }
        const bool noisy = opts.uncorrelated_sigma[0] > 0.0 || opts.uncorrelated_sigma[1] > 0.0;
        if (!has_ac_source(sources) && !noisy) {
            throw InvalidArgument("covariance mode needs an asynchronous-AC source or phase noise");
        }
    }

    const std::size_t count = path.pixels_nm.size();
    result.pixels.resize(count);
    if (opts.keep_counts) {
        result.counts.resize(count);
        if (opts.mode != ScanMode::Phases) result.moments.resize(count);
    }

    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                result.pixels[i] = scan_pixel(path.pixels_nm[i], i, probe, sources, pixel_cfg, opts,
                                              opts.keep_counts ? &result.counts[i] : nullptr,
                                              result.moments.empty() ? nullptr : &result.moments[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (std::isnan(result.pixels[i].phase1.phi)) {
            result.warnings.push_back("pixel " + std::to_string(i) + ": zero readout contrast, phases undefined");
        }
    }
    return result;
}

void write_scan_csv(std::ostream& os, const ScanResult& result) {
    os << "x_nm,y_nm,z_nm,phi1_rad,sig_phi1,phi2_rad,sig_phi2,cr1,cr2,cov_xx,cov_xy,cov_yx,cov_yy,sig_cov_yy,"
          "total_counts\n";
    for (const auto& px : result.pixels) {
        const double row[] = {px.position_nm.x(), px.position_nm.y(), px.position_nm.z(), px.phase1.phi,
                              px.phase1.sigma,    px.phase2.phi,      px.phase2.sigma,    px.phase1.contrast,
                              px.phase2.contrast};
        for (std::size_t k = 0; k < std::size(row); ++k) {
            if (k) os << ',';
            put(os, row[k]);
        }
        if (px.covariance) {
            for (double v : {px.covariance->xx.value, px.covariance->xy.value, px.covariance->yx.value,
                             px.covariance->yy.value, px.covariance->yy.sigma}) {
                os << ',';
                put(os, v);
            }
        } else {
            os << ",,,,,";
        }
        os << ',';
        put(os, px.total_counts);
        os << '\n';
    }
}

std::vector<double> mc_covariance_prediction(std::span<const std::array<double, 2>> dc_profiles_t,
                                             double ac_scaling, const RamseyConfig& cfg,
                                             std::size_t samples, std::uint64_t seed) {
    if (samples < 10000) throw InvalidArgument("covariance prediction needs at least 1e4 samples");
    const double k = cfg.gamma * cfg.tau_s;
    std::vector<double> out;
    out.reserve(dc_profiles_t.size());
    for (std::size_t p = 0; p < dc_profiles_t.size(); ++p) {
        Rng rng = make_stream(seed, p, 1);
        const double a1 = k * ac_scaling * dc_profiles_t[p][0];
        const double a2 = k * ac_scaling * dc_profiles_t[p][1];
        double acc = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            const double f = std::sin(2.0 * std::numbers::pi * uniform01(rng));
            acc += std::sin(a1 * f) * std::sin(a2 * f);
        }
        out.push_back(acc / static_cast<double>(samples));
    }
    return out;
}

double normalized_cross_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("profiles must have equal length >= 2");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw InvalidArgument("constant profile has no correlation");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace nvmux
