#pragma once

#include <cstdint>
#include <random>

namespace damvi {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based child seed: stream `index` of `base` does not depend on how
/// many other streams are drawn.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(mix64(base) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Two-level variant for (purpose, index) streams.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t purpose,
                                    std::uint64_t index) noexcept {
    return derive_seed(derive_seed(base, purpose), index);
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

/// Uniform index in [0, n). Avoids std::uniform_int_distribution so sampling is
/// identical across standard library implementations.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0 - range) % range; // 2^64 mod range
    std::uint64_t draw = rng();
    while (draw < threshold) draw = rng();
    return static_cast<std::size_t>(draw % range);
}

/// Uniform real in [0, 1) built from the top 53 bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace damvi
