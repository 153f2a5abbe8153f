#include "nvmux/random.hpp"

#include <array>

namespace nvmux {

Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t domain) {
    const std::array<std::uint32_t, 6> words{
        static_cast<std::uint32_t>(seed),   static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(domain >> 32)};
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace nvmux
