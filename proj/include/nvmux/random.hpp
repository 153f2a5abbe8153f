#pragma once

#include <cstdint>
#include <random>

namespace nvmux {

using Rng = std::mt19937_64;

/// Independent stream for work item `index` under a run seed. The mapping
/// depends only on (seed, index), never on which worker draws from it.
Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t domain = 0);

double uniform01(Rng& rng);

}  // namespace nvmux
