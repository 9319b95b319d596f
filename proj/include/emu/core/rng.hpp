#pragma once

#include <cstdint>
#include <random>

namespace emu {

using Rng = std::mt19937_64;

// Derives an independent stream seed; splitmix64 finalizer keeps streams
// decorrelated even for adjacent (base, stream) pairs.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform draw guaranteed inside the open interval (0,1).
inline double uniform_open(Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double u = dist(rng);
    if (u <= 0.0) u = 1e-12;
    if (u >= 1.0) u = 1.0 - 1e-12;
    return u;
}

}  // namespace emu
