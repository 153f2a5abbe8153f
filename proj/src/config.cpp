#include "nvmux/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <set>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

constexpr double kDeg = std::numbers::pi / 180.0;

// Typed access to one section with strict key checking.
class SectionReader {
public:
    SectionReader(const IniDocument& doc, const IniSection& section, std::set<std::string> allowed)
        : doc_(doc), section_(section) {
        for (const auto& e : section.entries) {
            if (!allowed.count(e.key)) fail(e.line, "unknown key '" + e.key + "' in [" + section.name + "]");
            if (!values_.emplace(e.key, &e).second) fail(e.line, "duplicate key '" + e.key + "'");
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double number(const std::string& key) const {
        const IniEntry& e = entry(key);
        double v = 0.0;
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
            fail(e.line, "'" + key + "' expects a finite number, got '" + e.value + "'");
        }
        return v;
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const IniEntry& e = entry(key);
        std::uint64_t v = 0;
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) {
            fail(e.line, "'" + key + "' expects a non-negative integer, got '" + e.value + "'");
        }
        return v;
    }
    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? unsigned_integer(key) : fallback;
    }

    std::string text(const std::string& key) const { return entry(key).value; }
    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? text(key) : fallback;
    }

    std::string choice(const std::string& key, std::initializer_list<const char*> options,
                       const std::string& fallback) const {
        if (!has(key)) return fallback;
        const IniEntry& e = entry(key);
        for (const char* o : options) {
            if (e.value == o) return e.value;
        }
        std::string list;
        for (const char* o : options) list += std::string(list.empty() ? "" : "|") + o;
        fail(e.line, "'" + key + "' must be one of " + list + ", got '" + e.value + "'");
    }

    bool boolean(const std::string& key, bool fallback) const {
        return choice(key, {"true", "false"}, fallback ? "true" : "false") == "true";
    }

    std::size_t line_of(const std::string& key) const { return has(key) ? entry(key).line : section_.line; }

    [[noreturn]] void fail(std::size_t line, const std::string& what) const {
        throw ConfigError(doc_.path, line, what);
    }

    // Runs `fn`, re-raising library validation errors against this section.
    template <class Fn>
    auto checked(Fn&& fn) const {
        try {
            return fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            fail(section_.line, "[" + section_.name + "]: " + e.what());
        }
    }

private:
    const IniEntry& entry(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) fail(section_.line, "[" + section_.name + "] is missing required key '" + key + "'");
        return *it->second;
    }

    const IniDocument& doc_;
    const IniSection& section_;
    std::map<std::string, const IniEntry*> values_;
};

Vec3 in_plane(double deg) { return Vec3(std::cos(deg * kDeg), std::sin(deg * kDeg), 0.0); }

ProbePair read_probe(const SectionReader& r) {
    ProbePair p;
    auto sensor = [&](int i) {
        const std::string k = std::to_string(i);
        NvSensor s;
        s.axis = r.checked([&] { return SensorAxis(r.number("theta" + k + "_deg"), r.number("phi" + k + "_deg")); });
        s.photon_yield = r.number("c" + k, 0.1);
        s.contrast = r.number("eps" + k, 0.2);
        if (r.has("zeta" + k) && r.has("t2star" + k + "_ns")) {
            r.fail(r.line_of("t2star" + k + "_ns"), "give either zeta" + k + " or t2star" + k + "_ns, not both");
        }
        if (r.has("t2star" + k + "_ns")) {
            s.dephasing = Dephasing::power_law(r.number("t2star" + k + "_ns") * 1e-9, 2.0);
        } else {
            s.dephasing = Dephasing::fixed(r.number("zeta" + k, 0.7));
        }
        const char a = i == 1 ? '1' : '2';
        s.transition_mhz = {r.number(std::string("f") + a + "a_mhz", 0.0), r.number(std::string("f") + a + "b_mhz", 0.0)};
        return s;
    };
    p.first = sensor(1);
    p.second = sensor(2);
    const double z1 = r.number("z1_nm");
    p.first.position_nm = Vec3(0.0, 0.0, z1);
    p.second.position_nm = Vec3(r.number("dx_nm"), r.number("dy_nm"), z1 + r.number("dz_nm"));
    r.checked([&] {
        p.first.validate();
        p.second.validate();
        return 0;
    });
    return p;
}

FieldSource read_field(const SectionReader& r) {
    const std::string kind = r.choice("kind", {"uniform", "edge", "wire"}, "");
    if (kind.empty()) r.fail(r.line_of("kind"), "[field] is missing required key 'kind'");
    if (kind == "uniform") {
        return UniformField{Vec3(r.number("bx_mt", 0.0), r.number("by_mt", 0.0), r.number("bz_mt", 0.0)) * 1e-3};
    }
    if (kind == "edge") {
        StripeEdge e;
        e.edge_position_nm = r.number("position_nm");
        e.edge_normal = in_plane(r.number("normal_deg", 0.0));
        e.sheet_moment_t_nm = r.number("sheet_moment_mt_nm") * 1e-3;
        e.magnetization_sign = static_cast<int>(r.number("sign", 1.0));
        r.checked([&] {
            e.validate();
            return 0;
        });
        return e;
    }
    FiniteWire w;
    w.width_nm = r.number("width_nm");
    w.center_nm = r.number("center_nm", 0.0);
    w.direction = in_plane(r.number("direction_deg", 90.0));
    const double amps = r.number("current_ma") * 1e-3;
    if (r.choice("waveform", {"dc", "ac"}, "dc") == "ac") {
        w.waveform = CurrentWaveform::async_ac(amps, r.number("frequency_khz") * 1e3);
    } else {
        w.waveform = CurrentWaveform::dc(amps);
    }
    r.checked([&] {
        w.validate();
        return 0;
    });
    return w;
}

SequenceConfig read_sequence(const SectionReader& r) {
    SequenceConfig s;
    s.ramsey.tau_s = r.number("tau_ns") * 1e-9;
    s.ramsey.n = r.unsigned_integer("n_shots");
    const std::string schedule = r.choice("schedule", {"sixteen", "eight", "n_sensor"}, "sixteen");
    // With two sensors the 4^N schedule is the sixteen-combination one.
    s.schedule = schedule == "eight" ? ScheduleKind::Eight : ScheduleKind::Sixteen;
    const std::string mode = r.choice("mode", {"phases", "covariance", "both"}, "both");
    s.mode = mode == "phases" ? ScanMode::Phases : mode == "covariance" ? ScanMode::Covariance : ScanMode::Both;
    s.contrast_source = r.choice("contrast", {"fitted", "nominal"}, "fitted") == "nominal" ? ContrastSource::Nominal
                                                                                           : ContrastSource::Fitted;
    s.uncorrelated_sigma = {r.number("sigma_u1_rad", 0.0), r.number("sigma_u2_rad", 0.0)};
    s.overhead_s = r.number("overhead_ns", 3000.0) * 1e-9;
    r.checked([&] {
        s.ramsey.validate();
        if (s.uncorrelated_sigma[0] < 0.0 || s.uncorrelated_sigma[1] < 0.0 || s.overhead_s < 0.0) {
            throw InvalidArgument("noise widths and overhead must be >= 0");
        }
        return 0;
    });
    return s;
}

ScanPath read_scan(const SectionReader& r, std::uint64_t dwell) {
    r.choice("kind", {"line"}, "line");
    const double height = r.number("height_nm", 0.0);
    const Vec3 start(r.number("start_x_nm"), r.number("start_y_nm", 0.0), height);
    const Vec3 stop(r.number("stop_x_nm"), r.number("stop_y_nm", 0.0), height);
    const auto pixels = r.unsigned_integer("pixels");
    const auto lines = r.unsigned_integer("lines", 1);
    const Vec3 step(r.number("line_step_x_nm", 0.0), r.number("line_step_y_nm", 0.0), 0.0);
    if (pixels == 0 || lines == 0) r.fail(r.line_of("pixels"), "pixels and lines must be >= 1");
    ScanPath path;
    path.dwell = dwell;
    for (std::uint64_t l = 0; l < lines; ++l) {
        const ScanPath one = ScanPath::line(start + static_cast<double>(l) * step, stop + static_cast<double>(l) * step,
                                            pixels, dwell);
        path.pixels_nm.insert(path.pixels_nm.end(), one.pixels_nm.begin(), one.pixels_nm.end());
    }
    return path;
}

Vec3 read_bias(const SectionReader& r) {
    return Vec3(r.number("bias_x_mt", 0.0), r.number("bias_y_mt", 0.0), r.number("bias_z_mt", 0.0)) * 1e-3;
}

}  // namespace

IniDocument parse_ini(std::istream& in, const std::string& path) {
    IniDocument doc{path, {}};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) throw ConfigError(path, line, "malformed section header");
            doc.sections.push_back({trim(std::string_view(s).substr(1, s.size() - 2)), line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(path, line, "expected 'key = value'");
        if (doc.sections.empty()) throw ConfigError(path, line, "key outside of any section");
        std::string value = trim(std::string_view(s).substr(eq + 1));
        if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
        IniEntry e{trim(std::string_view(s).substr(0, eq)), value, line};
        if (e.key.empty()) throw ConfigError(path, line, "empty key");
        doc.sections.back().entries.push_back(std::move(e));
    }
    return doc;
}

void RunConfig::require(std::initializer_list<const char*> sections) const {
    for (std::string_view s : sections) {
        const bool present = (s == "run" && seed) || (s == "probe" && probe) || (s == "sequence" && sequence) ||
                             (s == "scan" && scan) || (s == "odmr" && odmr) ||
                             (s == "calibration" && calibration) || (s == "field" && !fields.empty());
        if (!present) {
            throw ConfigError(path, 0, "missing required section [" + std::string(s) + "]" +
                                           (s == "run" ? " (with a seed)" : ""));
        }
    }
}

RunConfig parse_run_config(const IniDocument& doc) {
    RunConfig cfg;
    cfg.path = doc.path;
    std::set<std::string> seen;
    const IniSection* scan_section = nullptr;

    for (const auto& sec : doc.sections) {
        if (sec.name != "field" && !seen.insert(sec.name).second) {
            throw ConfigError(doc.path, sec.line, "section [" + sec.name + "] appears twice");
        }
        if (sec.name == "run") {
            SectionReader r(doc, sec, {"seed", "threads"});
            cfg.seed = r.unsigned_integer("seed");
            cfg.threads = static_cast<unsigned>(r.unsigned_integer("threads", 0));
        } else if (sec.name == "probe") {
            SectionReader r(doc, sec,
                            {"theta1_deg", "phi1_deg", "theta2_deg", "phi2_deg", "dx_nm", "dy_nm", "dz_nm", "z1_nm",
                             "c1", "c2", "eps1", "eps2", "zeta1", "zeta2", "t2star1_ns", "t2star2_ns", "f1a_mhz",
                             "f1b_mhz", "f2a_mhz", "f2b_mhz"});
            cfg.probe = read_probe(r);
        } else if (sec.name == "field") {
            SectionReader r(doc, sec,
                            {"kind", "bx_mt", "by_mt", "bz_mt", "position_nm", "normal_deg", "sheet_moment_mt_nm",
                             "sign", "width_nm", "center_nm", "direction_deg", "current_ma", "waveform",
                             "frequency_khz"});
            cfg.fields.push_back(read_field(r));
        } else if (sec.name == "sequence") {
            SectionReader r(doc, sec,
                            {"tau_ns", "n_shots", "schedule", "mode", "contrast", "zeta_power", "sigma_u1_rad",
                             "sigma_u2_rad", "overhead_ns"});
            cfg.sequence = read_sequence(r);
            const double power = r.number("zeta_power", 2.0);
            if (!(power > 0.0)) r.fail(r.line_of("zeta_power"), "zeta_power must be positive");
            if (cfg.probe) {
                for (NvSensor* s : {&cfg.probe->first, &cfg.probe->second}) {
                    if (s->dephasing.kind == Dephasing::Kind::PowerLaw) s->dephasing.power = power;
                }
            }
        } else if (sec.name == "scan") {
            scan_section = &sec;
        } else if (sec.name == "output") {
            SectionReader r(doc, sec, {"directory", "formats", "dump_counts"});
            cfg.output.directory = r.text("directory", "out");
            r.choice("formats", {"csv"}, "csv");
            cfg.output.dump_counts = r.boolean("dump_counts", false);
        } else if (sec.name == "odmr") {
            SectionReader r(doc, sec,
                            {"start_mhz", "stop_mhz", "step_mhz", "d0_mhz", "dip_depth", "dip_hwhm_mhz", "bias_x_mt",
                             "bias_y_mt", "bias_z_mt"});
            OdmrConfig o;
            o.start_mhz = r.number("start_mhz", o.start_mhz);
            o.stop_mhz = r.number("stop_mhz", o.stop_mhz);
            o.step_mhz = r.number("step_mhz", o.step_mhz);
            o.options.d0_mhz = r.number("d0_mhz", o.options.d0_mhz);
            o.options.dip_depth = r.number("dip_depth", o.options.dip_depth);
            o.options.dip_hwhm_mhz = r.number("dip_hwhm_mhz", o.options.dip_hwhm_mhz);
            o.bias_t = read_bias(r);
            r.checked([&] { return frequency_grid(o.start_mhz, o.stop_mhz, o.step_mhz).size(); });
            cfg.odmr = o;
        } else if (sec.name == "calibration") {
            SectionReader r(doc, sec,
                            {"sheet_moment_mt_nm", "sign", "x_edge_nm", "y_edge_nm", "bias_x_mt", "bias_y_mt",
                             "bias_z_mt", "d0_mhz", "noise_mhz", "scan_start_nm", "scan_stop_nm", "scan_points",
                             "bootstrap", "max_iterations"});
            CalibrationConfig c;
            c.sample.sheet_moment_t_nm = r.number("sheet_moment_mt_nm") * 1e-3;
            c.sample.magnetization_sign = static_cast<int>(r.number("sign", 1.0));
            c.sample.x_edge_nm = r.number("x_edge_nm", 0.0);
            c.sample.y_edge_nm = r.number("y_edge_nm", 0.0);
            c.sample.bias_t = read_bias(r);
            c.sample.d0_mhz = r.number("d0_mhz", 2870.0);
            c.noise_mhz = r.number("noise_mhz", c.noise_mhz);
            c.scan_start_nm = r.number("scan_start_nm", c.scan_start_nm);
            c.scan_stop_nm = r.number("scan_stop_nm", c.scan_stop_nm);
            c.scan_points = r.unsigned_integer("scan_points", c.scan_points);
            c.fit.bootstrap = r.unsigned_integer("bootstrap", c.fit.bootstrap);
            c.fit.max_iterations = r.unsigned_integer("max_iterations", c.fit.max_iterations);
            if (!(c.sample.sheet_moment_t_nm > 0.0) || std::abs(c.sample.magnetization_sign) != 1) {
                r.fail(sec.line, "sheet moment must be positive and sign +1 or -1");
            }
            if (c.scan_points < 5 || !(c.scan_stop_nm > c.scan_start_nm) || c.noise_mhz < 0.0) {
                r.fail(sec.line, "calibration scans need >= 5 points over an increasing range");
            }
            cfg.calibration = c;
        } else {
            throw ConfigError(doc.path, sec.line, "unknown section [" + sec.name + "]");
        }
    }

    if (scan_section) {
        SectionReader r(doc, *scan_section,
                        {"kind", "start_x_nm", "start_y_nm", "stop_x_nm", "stop_y_nm", "height_nm", "pixels", "lines",
                         "line_step_x_nm", "line_step_y_nm"});
        if (!cfg.sequence) r.fail(scan_section->line, "[scan] needs a [sequence] section for the shot count");
        cfg.scan = read_scan(r, cfg.sequence->ramsey.n);
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    return parse_run_config(parse_ini(in, path));
}

std::array<SensorGuess, 2> guess_from_probe(const ProbePair& probe, const EdgeSample& sample) {
    std::array<SensorGuess, 2> g;
    for (std::size_t s = 0; s < 2; ++s) {
        const NvSensor& n = probe[s];
        g[s] = {n.axis.theta_deg(), n.axis.phi_deg(), n.position_nm.z(), sample.x_edge_nm - n.position_nm.x(),
                sample.y_edge_nm - n.position_nm.y()};
    }
    return g;
}

}  // namespace nvmux
