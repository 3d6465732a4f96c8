#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

// Platform-stable randomness. std::mt19937_64 output is fully specified by the
// standard, but the std distributions are not, so draws are mapped by hand.
namespace chainforge {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Order-sensitive seed derivation for independent per-chain streams.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243F6A8885A308D3ull;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

// Uniform in [0, 1) with 53 bits of precision.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in [0, n), rejection-sampled to avoid modulo bias. n > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

}  // namespace chainforge
