#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace wgn {

/// Uniform integer in [0, bound) by rejection sampling on raw 64-bit draws.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return draw % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t k = items.size(); k > 1; --k) {
        const auto pick = static_cast<std::size_t>(uniform_below(rng, k));
        std::swap(items[k - 1], items[pick]);
    }
}

}  // namespace wgn
