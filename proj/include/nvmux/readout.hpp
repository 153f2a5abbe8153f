#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvmux {

/// Relative phase of the second pi/2 pulse. Storage order is (+x, +y, -x, -y),
/// mapped to (0, 90, 180, 270) degrees.
enum class ReadoutPhase : std::uint8_t { PlusX = 0, PlusY = 1, MinusX = 2, MinusY = 3 };

inline constexpr std::array<ReadoutPhase, 4> kReadoutPhases{
    ReadoutPhase::PlusX, ReadoutPhase::PlusY, ReadoutPhase::MinusX, ReadoutPhase::MinusY};

inline constexpr std::size_t kComboCount = 16;

double readout_angle(ReadoutPhase p);
std::string_view readout_label(ReadoutPhase p);

struct ReadoutCombo {
    ReadoutPhase first = ReadoutPhase::PlusX;
    ReadoutPhase second = ReadoutPhase::PlusX;

    /// Row-major: 4 * index(first) + index(second).
    constexpr std::size_t index() const noexcept {
        return 4 * static_cast<std::size_t>(first) + static_cast<std::size_t>(second);
    }
    static constexpr ReadoutCombo from_index(std::size_t i) noexcept {
        return {static_cast<ReadoutPhase>(i / 4), static_cast<ReadoutPhase>(i % 4)};
    }
    /// E.g. "+y-x".
    std::string label() const;
    static std::optional<ReadoutCombo> parse(std::string_view label);

    friend constexpr bool operator==(ReadoutCombo, ReadoutCombo) = default;
};

std::array<ReadoutCombo, kComboCount> sixteen_schedule();

/// The reduced schedule: every (Phi1, +x) and every (+x, Phi2). (+x, +x)
/// appears twice, so all eight slots carry equal shots.
std::array<ReadoutCombo, 8> eight_schedule();

struct CountCell {
    double total = 0.0;
    std::uint64_t shots = 0;
};

/// Accumulated photon totals per readout combination. Cells may be absent
/// (reduced schedules); estimators that need a missing cell throw IncompleteMatrix.
class CountMatrix {
public:
    CountMatrix() = default;

    static CountMatrix uniform(const std::array<double, kComboCount>& totals, std::uint64_t n);

    void set(ReadoutCombo combo, double total, std::uint64_t shots);
    void add(ReadoutCombo combo, double total, std::uint64_t shots);
    bool has(ReadoutCombo combo) const { return cells_[combo.index()].has_value(); }
    bool complete() const;
    const CountCell& at(ReadoutCombo combo) const;
    double rate(ReadoutCombo combo) const;
    double grand_total() const;

private:
    std::array<std::optional<CountCell>, kComboCount> cells_{};
};

/// Streaming raw power sums of per-shot counts for one combination.
struct CellMoments {
    std::uint64_t n = 0;
    std::uint64_t s1 = 0;
    std::uint64_t s2 = 0;
    std::uint64_t s3 = 0;
    std::uint64_t s4 = 0;

    void add(std::uint64_t k) noexcept {
        const std::uint64_t k2 = k * k;
        ++n;
        s1 += k;
        s2 += k2;
        s3 += k2 * k;
        s4 += k2 * k2;
    }
    void merge(const CellMoments& o) noexcept {
        n += o.n;
        s1 += o.s1;
        s2 += o.s2;
        s3 += o.s3;
        s4 += o.s4;
    }

    /// Sample mean E.
    double mean() const;
    /// Unbiased (n - 1) sample variance V.
    double variance() const;
    /// Standard error of V - E, from the third and fourth central moments.
    double sigma_v_minus_e() const;
};

struct MomentMatrix {
    std::array<CellMoments, kComboCount> cells{};

    const CellMoments& at(ReadoutCombo c) const { return cells[c.index()]; }
    CellMoments& at(ReadoutCombo c) { return cells[c.index()]; }
    bool complete() const;
    /// Totals view; cells without shots are left absent.
    CountMatrix counts() const;
};

/// 4^N readout totals for N sensors. Index digits are base 4, sensor 0 most
/// significant, matching CountMatrix for N = 2.
struct NSensorCounts {
    int n_sensors = 0;
    std::uint64_t n = 0;
    std::vector<double> totals;
};

}  // namespace nvmux
