#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvmux/demux.hpp"
#include "nvmux/fields.hpp"
#include "nvmux/probe.hpp"
#include "nvmux/spinmodel.hpp"

namespace nvmux {

/// Probe apex positions (nm) and repetitions per combination at each pixel.
struct ScanPath {
    std::vector<Vec3> pixels_nm;
    std::uint64_t dwell = 1;

    static ScanPath line(const Vec3& start_nm, const Vec3& stop_nm, std::size_t count, std::uint64_t dwell);
    void validate() const;
};

enum class ScanMode { Phases, Covariance, Both };
enum class ContrastSource { Fitted, Nominal };
enum class ScheduleKind { Sixteen, Eight };

struct ScanOptions {
    ScanMode mode = ScanMode::Both;
    ScheduleKind schedule = ScheduleKind::Sixteen;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency
    ContrastSource contrast_source = ContrastSource::Fitted;
    std::array<double, 2> uncorrelated_sigma{0.0, 0.0};  // rad, per sensor
    bool keep_counts = false;
};

struct PixelResult {
    Vec3 position_nm = Vec3::Zero();
    PhaseEstimate phase1;
    PhaseEstimate phase2;
    std::optional<CovarianceEstimate> covariance;
    std::optional<CorrelatedCovariance> correlated;
    double total_counts = 0.0;
};

struct ScanResult {
    std::vector<PixelResult> pixels;
    std::vector<CountMatrix> counts;      // per pixel when keep_counts
    std::vector<MomentMatrix> moments;    // per pixel when keep_counts and shots were sampled
    std::vector<std::string> warnings;
};

/// Phase model at one apex position: static sources set the mean phases,
/// every asynchronous-AC wire adds one shared arcsine term.
PhaseSampler pixel_sampler(const ProbePair& probe, std::span<const FieldSource> sources,
                           const RamseyConfig& cfg, const Vec3& apex_nm,
                           std::array<double, 2> uncorrelated_sigma = {0.0, 0.0});

/// Mean per-shot rate of a combination averaged over the sampler's fluctuations.
double mean_rate(const ProbePair& probe, double tau_s, const PhaseSampler& sampler, ReadoutCombo combo);

/// Runs the readout schedule at every pixel. Pixel i draws from
/// make_stream(seed, i), so results do not depend on the worker count.
ScanResult run_scan(const ScanPath& path, const ProbePair& probe, std::span<const FieldSource> sources,
                    const RamseyConfig& cfg, const ScanOptions& opts);

void write_scan_csv(std::ostream& os, const ScanResult& result);

/// Predicted cov_yy per pixel from static projections (tesla) scaled by an
/// arcsine factor: mean of sin(gamma tau s B1) sin(gamma tau s B2), s = ac_scaling sin(u).
std::vector<double> mc_covariance_prediction(std::span<const std::array<double, 2>> dc_profiles_t,
                                             double ac_scaling, const RamseyConfig& cfg,
                                             std::size_t samples, std::uint64_t seed);

/// Pearson correlation of two equally long profiles.
double normalized_cross_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace nvmux
