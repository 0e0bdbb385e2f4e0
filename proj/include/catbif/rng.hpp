#pragma once

#include <cstdint>
#include <random>

namespace catbif {

/// splitmix64 finalizer; the documented rule for deriving independent
/// per-path streams from a master seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream `index` of master seed `seed`: mt19937_64 seeded with
/// mix_seed(seed + index * golden-ratio increment).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index = 0) {
    return std::mt19937_64(mix_seed(seed + index * 0x9e3779b97f4a7c15ULL));
}

}  // namespace catbif
