#include "nvmux/readout.hpp"

#include <cmath>
#include <numbers>

#include "nvmux/errors.hpp"

namespace nvmux {

double readout_angle(ReadoutPhase p) {
    return static_cast<double>(static_cast<int>(p)) * 0.5 * std::numbers::pi;
}

std::string_view readout_label(ReadoutPhase p) {
    switch (p) {
        case ReadoutPhase::PlusX: return "+x";
        case ReadoutPhase::PlusY: return "+y";
        case ReadoutPhase::MinusX: return "-x";
        case ReadoutPhase::MinusY: return "-y";
    }
    return "?";
}

std::string ReadoutCombo::label() const {
    std::string s(readout_label(first));
    s += readout_label(second);
    return s;
}

std::optional<ReadoutCombo> ReadoutCombo::parse(std::string_view label) {
    if (label.size() != 4) return std::nullopt;
    auto one = [](std::string_view p) -> std::optional<ReadoutPhase> {
        for (auto r : kReadoutPhases) {
            if (readout_label(r) == p) return r;
        }
        return std::nullopt;
    };
    const auto a = one(label.substr(0, 2));
    const auto b = one(label.substr(2, 2));
    if (!a || !b) return std::nullopt;
    return ReadoutCombo{*a, *b};
}

std::array<ReadoutCombo, kComboCount> sixteen_schedule() {
    std::array<ReadoutCombo, kComboCount> out{};
    for (std::size_t i = 0; i < kComboCount; ++i) out[i] = ReadoutCombo::from_index(i);
    return out;
}

std::array<ReadoutCombo, 8> eight_schedule() {
    std::array<ReadoutCombo, 8> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        out[i] = {kReadoutPhases[i], ReadoutPhase::PlusX};
        out[4 + i] = {ReadoutPhase::PlusX, kReadoutPhases[i]};
    }
    return out;
}

CountMatrix CountMatrix::uniform(const std::array<double, kComboCount>& totals, std::uint64_t n) {
    CountMatrix m;
    for (std::size_t i = 0; i < kComboCount; ++i) m.set(ReadoutCombo::from_index(i), totals[i], n);
    return m;
}

void CountMatrix::set(ReadoutCombo combo, double total, std::uint64_t shots) {
    if (!(total >= 0.0) || !std::isfinite(total)) throw InvalidArgument("count totals must be non-negative");
    if (shots == 0) throw InvalidArgument("a count cell needs at least one shot");
    cells_[combo.index()] = CountCell{total, shots};
}

void CountMatrix::add(ReadoutCombo combo, double total, std::uint64_t shots) {
    auto& cell = cells_[combo.index()];
    if (!cell) {
        set(combo, total, shots);
        return;
    }
    cell->total += total;
    cell->shots += shots;
}

bool CountMatrix::complete() const {
    for (const auto& c : cells_) {
        if (!c) return false;
    }
    return true;
}

const CountCell& CountMatrix::at(ReadoutCombo combo) const {
    const auto& cell = cells_[combo.index()];
    if (!cell) throw IncompleteMatrix("missing readout combination " + combo.label());
    return *cell;
}

double CountMatrix::rate(ReadoutCombo combo) const {
    const auto& c = at(combo);
    return c.total / static_cast<double>(c.shots);
}

double CountMatrix::grand_total() const {
    double sum = 0.0;
    for (const auto& c : cells_) {
        if (c) sum += c->total;
    }
    return sum;
}

double CellMoments::mean() const {
    return n ? static_cast<double>(s1) / static_cast<double>(n) : 0.0;
}

double CellMoments::variance() const {
    if (n < 2) return 0.0;
    // n * s2 - s1^2 is exact in 128-bit integers.
    __extension__ typedef unsigned __int128 u128;
    const u128 num = static_cast<u128>(n) * s2 - static_cast<u128>(s1) * s1;
    const double dn = static_cast<double>(n);
    return static_cast<double>(num) / (dn * (dn - 1.0));
}

double CellMoments::sigma_v_minus_e() const {
    if (n < 4) return 0.0;
    const long double dn = n;
    const long double mu = s1 / dn;
    const long double r2 = s2 / dn;
    const long double r3 = s3 / dn;
    const long double r4 = s4 / dn;
    const long double m2 = r2 - mu * mu;
    const long double m3 = r3 - 3 * mu * r2 + 2 * mu * mu * mu;
    const long double m4 = r4 - 4 * mu * r3 + 6 * mu * mu * r2 - 3 * mu * mu * mu * mu;
    const long double var_v = (m4 - (dn - 3) / (dn - 1) * m2 * m2) / dn;
    const long double var_e = m2 / dn;
    const long double cov_ve = m3 / dn;
    const long double v = var_v + var_e - 2 * cov_ve;
    return v > 0 ? static_cast<double>(std::sqrt(v)) : 0.0;
}

bool MomentMatrix::complete() const {
    for (const auto& c : cells) {
        if (c.n < 2) return false;
    }
    return true;
}

CountMatrix MomentMatrix::counts() const {
    CountMatrix m;
    for (std::size_t i = 0; i < kComboCount; ++i) {
        if (cells[i].n > 0) m.set(ReadoutCombo::from_index(i), static_cast<double>(cells[i].s1), cells[i].n);
    }
    return m;
}

}  // namespace nvmux
