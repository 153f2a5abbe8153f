#include "nvmux/odmr.hpp"

#include <algorithm>
#include <cmath>

#include "nvmux/errors.hpp"

namespace nvmux {

std::vector<double> frequency_grid(double start_mhz, double stop_mhz, double step_mhz) {
    if (!std::isfinite(start_mhz) || !std::isfinite(stop_mhz) || !(step_mhz > 0.0) || stop_mhz < start_mhz) {
        throw InvalidArgument("frequency grid needs finite start <= stop and step > 0");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop_mhz - start_mhz) / step_mhz + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t k = 0; k < count; ++k) grid[k] = start_mhz + static_cast<double>(k) * step_mhz;
    return grid;
}

std::array<double, 2> transition_frequencies(const NvSensor& sensor, const Vec3& bias_t,
                                             const OdmrOptions& opts) {
    const double shift = opts.gamma / (2.0 * std::numbers::pi) * std::abs(project_field(sensor.axis, bias_t)) * 1e-6;
    if (opts.d0_mhz - shift <= 0.0) {
        throw InvalidArgument("bias field too strong: lower transition would be non-positive");
    }
    return {opts.d0_mhz - shift, opts.d0_mhz + shift};
}

OdmrSpectrum odmr_spectrum(const ProbePair& probe, const Vec3& bias_t, std::span<const double> grid_mhz,
                           const OdmrOptions& opts) {
    if (!(opts.dip_hwhm_mhz > 0.0) || !(opts.dip_depth >= 0.0)) {
        throw InvalidArgument("dip width must be positive and depth non-negative");
    }
    OdmrSpectrum out;
    for (int s = 0; s < 2; ++s) {
        const auto f = transition_frequencies(probe[static_cast<std::size_t>(s)], bias_t, opts);
        out.transitions[static_cast<std::size_t>(2 * s)] = {s, -1, f[0]};
        out.transitions[static_cast<std::size_t>(2 * s + 1)] = {s, +1, f[1]};

        if (f[1] - f[0] < opts.dip_hwhm_mhz) {
            out.resolved_dips.push_back({s, 0, 0.5 * (f[0] + f[1])});
        } else {
            out.resolved_dips.push_back(out.transitions[static_cast<std::size_t>(2 * s)]);
            out.resolved_dips.push_back(out.transitions[static_cast<std::size_t>(2 * s + 1)]);
        }
    }

    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            if (std::abs(out.transitions[i].center_mhz - out.transitions[j].center_mhz) < 2.0 * opts.dip_hwhm_mhz) {
                out.overlapping = true;
            }
        }
    }

    std::vector<double> centers;
    for (const auto& d : out.resolved_dips) centers.push_back(d.center_mhz);
    std::sort(centers.begin(), centers.end());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        if (i == 0 || centers[i] - centers[i - 1] >= opts.dip_hwhm_mhz) ++out.distinct_centers;
    }

    const double hw2 = opts.dip_hwhm_mhz * opts.dip_hwhm_mhz;
    out.freq_mhz.assign(grid_mhz.begin(), grid_mhz.end());
    out.pl.reserve(grid_mhz.size());
    for (double f : grid_mhz) {
        double pl = 1.0;
        for (const auto& t : out.transitions) {
            const double d = f - t.center_mhz;
            pl -= opts.dip_depth * hw2 / (d * d + hw2);
        }
        out.pl.push_back(pl);
    }
    return out;
}

std::size_t count_local_minima(std::span<const double> values) {
    std::size_t minima = 0;
    std::size_t i = 1;
    while (i + 1 < values.size()) {
        if (values[i] < values[i - 1]) {
            std::size_t j = i;
            while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
            if (j + 1 < values.size() && values[j + 1] > values[i]) ++minima;
            i = j + 1;
        } else {
            ++i;
        }
    }
    return minima;
}

}  // namespace nvmux
