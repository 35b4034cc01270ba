#pragma once

#include <cstdint>
#include <random>

namespace mtdg {

/// Uniform double in [0,1) built from the top 53 bits of the engine output,
/// so sequences are identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Sub-seed derivation: every consumer of randomness hashes
/// (root seed, stream id, counter) through splitmix64 so that independent
/// streams never share state. Stream ids are small module-local constants.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t counter = 0) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace mtdg
