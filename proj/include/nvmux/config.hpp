#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nvmux/calibration.hpp"
#include "nvmux/fields.hpp"
#include "nvmux/odmr.hpp"
#include "nvmux/probe.hpp"
#include "nvmux/scanner.hpp"
#include "nvmux/spinmodel.hpp"

namespace nvmux {

/// Flat INI: `[section]` headers and `key = value` lines; `#` or `;` start a
/// comment. Sections may repeat; keys are validated by load_run_config.
struct IniEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct IniSection {
    std::string name;
    std::size_t line = 0;
    std::vector<IniEntry> entries;
};

struct IniDocument {
    std::string path;
    std::vector<IniSection> sections;
};

IniDocument parse_ini(std::istream& in, const std::string& path);

struct SequenceConfig {
    RamseyConfig ramsey;
    ScheduleKind schedule = ScheduleKind::Sixteen;
    ScanMode mode = ScanMode::Both;
    ContrastSource contrast_source = ContrastSource::Fitted;
    std::array<double, 2> uncorrelated_sigma{0.0, 0.0};
    double overhead_s = 3e-6;
};

struct OutputConfig {
    std::string directory = "out";
    bool dump_counts = false;
};

struct OdmrConfig {
    double start_mhz = 2700.0;
    double stop_mhz = 3040.0;
    double step_mhz = 0.5;
    Vec3 bias_t = Vec3::Zero();
    OdmrOptions options;
};

struct CalibrationConfig {
    EdgeSample sample;
    double noise_mhz = 0.5;
    double scan_start_nm = -600.0;
    double scan_stop_nm = 600.0;
    std::size_t scan_points = 241;
    FitOptions fit;
};

struct RunConfig {
    std::string path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::optional<ProbePair> probe;
    std::vector<FieldSource> fields;
    std::optional<SequenceConfig> sequence;
    std::optional<ScanPath> scan;
    OutputConfig output;
    std::optional<OdmrConfig> odmr;
    std::optional<CalibrationConfig> calibration;

    /// Throws ConfigError naming the first missing section.
    void require(std::initializer_list<const char*> sections) const;
};

/// Strict parse: unknown sections or keys, duplicate keys and malformed
/// values raise ConfigError with the offending line.
RunConfig parse_run_config(const IniDocument& doc);
RunConfig load_run_config(const std::string& path);

/// Initial guesses for the edge fit derived from a nominal probe and sample.
std::array<SensorGuess, 2> guess_from_probe(const ProbePair& probe, const EdgeSample& sample);

}  // namespace nvmux
