#include "nvmux/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const std::string& source, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError(source, line, "row " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

}  // namespace

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_counts_csv(std::ostream& os, const CountMatrix& counts, const MomentMatrix* moments) {
    os << "combo,total,E,V\n";
    for (const ReadoutCombo c : sixteen_schedule()) {
        if (!counts.has(c)) continue;
        const CountCell& cell = counts.at(c);
        os << c.label() << ',' << fmt9(cell.total) << ',' << fmt9(counts.rate(c)) << ',';
        if (moments && moments->at(c).n >= 2) os << fmt9(moments->at(c).variance());
        os << '\n';
    }
}

CountMatrix read_counts_csv(std::istream& is, const std::string& source) {
    CountMatrix m;
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (row == 1) {
            if (line.rfind("combo,total,E", 0) != 0) throw ConfigError(source, row, "unexpected header");
            continue;
        }
        if (line.empty() || line == "\r") continue;
        const auto f = split(line);
        if (f.size() != 4) throw ConfigError(source, row, "row " + std::to_string(row) + ": expected 4 fields");
        const auto combo = ReadoutCombo::parse(f[0]);
        if (!combo) throw ConfigError(source, row, "row " + std::to_string(row) + ": unknown combo '" + f[0] + "'");
        const double total = parse_number(f[1], source, row);
        const double rate = parse_number(f[2], source, row);
        if (!(rate > 0.0) || total < 0.0) {
            throw ConfigError(source, row, "row " + std::to_string(row) + ": total and E must be positive");
        }
        m.set(*combo, total, static_cast<std::uint64_t>(std::llround(total / rate)));
    }
    return m;
}

void write_edge_scan_csv(std::ostream& os, const EdgeScan& scan) {
    os << "position_nm,f1_minus_mhz,f1_plus_mhz,f2_minus_mhz,f2_plus_mhz\n";
    for (std::size_t i = 0; i < scan.position_nm.size(); ++i) {
        os << fmt9(scan.position_nm[i]);
        for (double f : scan.freq_mhz[i]) os << ',' << fmt9(f);
        os << '\n';
    }
}

EdgeScan read_edge_scan_csv(std::istream& is, const std::string& source, ScanAxis axis) {
    EdgeScan scan;
    scan.axis = axis;
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (row == 1) {
            if (line.rfind("position_nm", 0) != 0) throw ConfigError(source, row, "row 1: expected header");
            continue;
        }
        if (line.empty() || line == "\r") continue;
        const auto f = split(line);
        if (f.size() != 5) {
            throw ConfigError(source, row, "row " + std::to_string(row) + ": expected 5 fields, got " +
                                               std::to_string(f.size()));
        }
        scan.position_nm.push_back(parse_number(f[0], source, row));
        std::array<double, 4> freq{};
        for (int k = 0; k < 4; ++k) freq[k] = parse_number(f[k + 1], source, row);
        scan.freq_mhz.push_back(freq);
    }
    if (scan.position_nm.empty()) throw ConfigError(source, row, "no data rows");
    return scan;
}

void write_spectrum_csv(std::ostream& os, const OdmrSpectrum& spectrum) {
    os << "freq_mhz,pl\n";
    for (std::size_t i = 0; i < spectrum.freq_mhz.size(); ++i) {
        os << fmt9(spectrum.freq_mhz[i]) << ',' << fmt9(spectrum.pl[i]) << '\n';
    }
}

void write_transitions_csv(std::ostream& os, const OdmrSpectrum& spectrum) {
    os << "sensor,branch,center_mhz\n";
    for (const OdmrDip& d : spectrum.transitions) {
        os << d.sensor + 1 << ',' << (d.branch < 0 ? "minus" : "plus") << ',' << fmt9(d.center_mhz) << '\n';
    }
}

}  // namespace nvmux
