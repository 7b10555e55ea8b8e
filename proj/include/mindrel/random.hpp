#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mindrel {

using Rng = std::mt19937_64;

inline auto splitmix64(std::uint64_t x) noexcept -> std::uint64_t
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

// Independent stream seed from a base seed and a path of integers
// (e.g. repetition, sample, step). Order of the path matters.
inline auto derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept -> std::uint64_t
{
    std::uint64_t h = splitmix64(base);
    for (auto v : path) {
        h = splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
    }
    return h;
}

} // namespace mindrel
