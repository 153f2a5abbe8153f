#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "nvmux/calibration.hpp"
#include "nvmux/config.hpp"
#include "nvmux/csv_io.hpp"
#include "nvmux/errors.hpp"
#include "nvmux/odmr.hpp"
#include "nvmux/scanner.hpp"
#include "nvmux/selftest.hpp"

namespace fs = std::filesystem;
using namespace nvmux;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
    bool dump_counts = false;
};

struct Overrides {
    std::uint64_t seed;
    unsigned threads;
    fs::path out_dir;
    bool dump_counts;
};

Overrides resolve(const RunConfig& cfg, const Globals& g) {
    // --seed overrides but never replaces the seed the config must carry.
    cfg.require({"run"});
    Overrides o{g.seed ? *g.seed : *cfg.seed, g.threads ? *g.threads : cfg.threads,
                g.out_dir ? fs::path(*g.out_dir) : fs::path(cfg.output.directory),
                g.dump_counts || cfg.output.dump_counts};
    fs::create_directories(o.out_dir);
    return o;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

int cmd_scan(const std::string& path, const Globals& g) {
    const RunConfig cfg = load_run_config(path);
    cfg.require({"probe", "sequence", "scan"});
    const Overrides o = resolve(cfg, g);

    ScanOptions opts;
    opts.mode = cfg.sequence->mode;
    opts.schedule = cfg.sequence->schedule;
    opts.seed = o.seed;
    opts.threads = o.threads;
    opts.contrast_source = cfg.sequence->contrast_source;
    opts.uncorrelated_sigma = cfg.sequence->uncorrelated_sigma;
    opts.keep_counts = o.dump_counts;

    const ScanResult result = run_scan(*cfg.scan, *cfg.probe, cfg.fields, cfg.sequence->ramsey, opts);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

    {
        auto os = open_out(o.out_dir / "scan_result.csv");
        write_scan_csv(os, result);
    }
    if (o.dump_counts) {
        for (std::size_t i = 0; i < result.counts.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "counts_matrix_%04zu.csv", i);
            auto os = open_out(o.out_dir / name);
            write_counts_csv(os, result.counts[i], i < result.moments.size() ? &result.moments[i] : nullptr);
        }
    }
    std::cout << "wrote " << result.pixels.size() << " pixels to " << (o.out_dir / "scan_result.csv").string()
              << '\n';
    return 0;
}

EdgeScan load_edge_scan(const std::string& file, ScanAxis axis) {
    std::ifstream is(file);
    if (!is) throw ConfigError(file, 0, "cannot open scan file");
    return read_edge_scan_csv(is, file, axis);
}

int cmd_calibrate(const std::string& path, const std::string& x_file, const std::string& y_file,
                  std::optional<std::size_t> bootstrap, const Globals& g) {
    const RunConfig cfg = load_run_config(path);
    cfg.require({"probe", "calibration"});
    const Overrides o = resolve(cfg, g);
    const EdgeScan xs = load_edge_scan(x_file, ScanAxis::X);
    const EdgeScan ys = load_edge_scan(y_file, ScanAxis::Y);

    FitOptions fit = cfg.calibration->fit;
    fit.seed = o.seed;
    if (bootstrap) fit.bootstrap = *bootstrap;
    const EdgeSample& sample = cfg.calibration->sample;

    ProbeFitResult result;
    try {
        result = fit_probe_geometry(xs, ys, guess_from_probe(*cfg.probe, sample), sample, fit);
    } catch (const FitFailure& f) {
        std::cerr << "error: " << f.what() << "\nbest parameters so far:\n";
        write_fit_report(std::cerr, f.best());
        return 1;
    }
    {
        auto os = open_out(o.out_dir / "fit_report.txt");
        write_fit_report(os, result);
    }
    {
        auto os = open_out(o.out_dir / "fit_residuals.csv");
        write_fit_residuals(os, xs, ys, result, sample);
    }
    write_fit_report(std::cout, result);
    return 0;
}

int cmd_simulate_edges(const std::string& path, const Globals& g) {
    const RunConfig cfg = load_run_config(path);
    cfg.require({"probe", "calibration"});
    const Overrides o = resolve(cfg, g);
    const CalibrationConfig& c = *cfg.calibration;

    for (const ScanAxis axis : {ScanAxis::X, ScanAxis::Y}) {
        const double edge = axis == ScanAxis::X ? c.sample.x_edge_nm : c.sample.y_edge_nm;
        std::vector<double> positions(c.scan_points);
        for (std::size_t i = 0; i < positions.size(); ++i) {
            positions[i] = edge + c.scan_start_nm +
                           (c.scan_stop_nm - c.scan_start_nm) * static_cast<double>(i) / (positions.size() - 1);
        }
        Rng rng = make_stream(o.seed, axis == ScanAxis::X ? 0 : 1, 3);
        const EdgeScan scan = simulate_edge_scan(*cfg.probe, c.sample, axis, positions, c.noise_mhz, rng);
        const fs::path file = o.out_dir / (axis == ScanAxis::X ? "edge_scan_x.csv" : "edge_scan_y.csv");
        auto os = open_out(file);
        write_edge_scan_csv(os, scan);
        std::cout << "wrote " << file.string() << '\n';
    }
    return 0;
}

int cmd_odmr(const std::string& path, const Globals& g) {
    const RunConfig cfg = load_run_config(path);
    cfg.require({"probe", "odmr"});
    const Overrides o = resolve(cfg, g);
    const OdmrConfig& oc = *cfg.odmr;
    const auto grid = frequency_grid(oc.start_mhz, oc.stop_mhz, oc.step_mhz);
    const OdmrSpectrum s = odmr_spectrum(*cfg.probe, oc.bias_t, grid, oc.options);
    {
        auto os = open_out(o.out_dir / "odmr_spectrum.csv");
        write_spectrum_csv(os, s);
    }
    {
        auto os = open_out(o.out_dir / "odmr_transitions.csv");
        write_transitions_csv(os, s);
    }
    std::cout << "resolved dips: " << s.resolved_dips.size() << ", spectrum minima: " << count_local_minima(s.pl)
              << (s.overlapping ? " (overlapping transitions)" : "") << '\n';
    return 0;
}

int cmd_selftest(const Globals& g) {
    bool ok = true;
    for (const auto& c : run_selftest(mean_phases, g.seed.value_or(1))) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-NV multiplexed Ramsey magnetometry simulator"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out_dir;
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    auto* threads_opt = app.add_option("--threads", threads, "scanner worker threads (0: all cores)");
    auto* out_opt = app.add_option("--out-dir", out_dir, "output directory");
    app.add_flag("--dump-counts", g.dump_counts, "write the readout count matrix of every pixel");

    std::string config;
    auto* scan = app.add_subcommand("scan", "simulate a multiplexed scan");
    scan->add_option("config", config, "INI config")->required();
    scan->fallthrough();

    std::string x_file, y_file;
    std::size_t bootstrap = 0;
    auto* cal = app.add_subcommand("calibrate", "fit probe geometry from two edge scans");
    cal->add_option("config", config, "INI config")->required();
    cal->add_option("--x-scan", x_file, "edge scan across the x edge")->required();
    cal->add_option("--y-scan", y_file, "edge scan across the y edge")->required();
    auto* boot_opt = cal->add_option("--bootstrap", bootstrap, "bootstrap resamples (0: no uncertainties)");
    cal->fallthrough();

    auto* odmr = app.add_subcommand("odmr", "compute a two-sensor ODMR spectrum");
    odmr->add_option("config", config, "INI config")->required();
    odmr->fallthrough();

    auto* sim = app.add_subcommand("simulate-edges", "write synthetic calibration edge scans");
    sim->add_option("config", config, "INI config")->required();
    sim->fallthrough();

    auto* self = app.add_subcommand("selftest", "run the fast invariant suite");
    self->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (*seed_opt) g.seed = seed;
    if (*threads_opt) g.threads = threads;
    if (*out_opt) g.out_dir = out_dir;

    try {
        if (*scan) return cmd_scan(config, g);
        if (*cal) {
            return cmd_calibrate(config, x_file, y_file,
                                 *boot_opt ? std::optional<std::size_t>(bootstrap) : std::nullopt, g);
        }
        if (*odmr) return cmd_odmr(config, g);
        if (*sim) return cmd_simulate_edges(config, g);
        if (*self) return cmd_selftest(g);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
