#pragma once

#include <cstdint>

namespace regflow {

/// Deterministic 64-bit generator (splitmix64, Steele/Lea/Flood constants).
/// Used everywhere reproducible draws are needed so that results do not
/// depend on the standard library's distribution implementations.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw on [0, 1) with 53 significant bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform draw on [-1, 1).
    double next_symmetric() {
        return 2.0 * next_unit() - 1.0;
    }
};

}  // namespace regflow
