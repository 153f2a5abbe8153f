#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nvmux/demux.hpp"

namespace nvmux {

struct SelfTestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

using PhaseDemux = std::function<std::pair<PhaseEstimate, PhaseEstimate>(const CountMatrix&)>;

/// Fast invariant suite: noiseless phase round trip, Poisson V = E per cell
/// and agreement of the two covariance estimator forms. `demux` replaces the
/// mean-phase estimator (used to check that a broken one is caught).
std::vector<SelfTestCheck> run_selftest(const PhaseDemux& demux = mean_phases, std::uint64_t seed = 1);

}  // namespace nvmux
