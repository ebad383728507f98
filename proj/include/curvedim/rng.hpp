#pragma once

#include <cstdint>
#include <random>

namespace curvedim {

using Rng = std::mt19937_64;

/// Deterministic independent stream for (seed, stream index). Results do not
/// depend on the order in which streams are created.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    const std::uint64_t a = mix(seed);
    const std::uint64_t b = mix(a ^ mix(stream + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

/// Child seed for nested Monte Carlo layers.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    Rng rng = make_stream(seed, stream);
    return rng();
}

}  // namespace curvedim
