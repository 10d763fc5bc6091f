#pragma once

#include <cstdint>
#include <random>

namespace rvrp {

using Rng = std::mt19937_64;

// splitmix64 finalizer. Child streams for nested solver stages are derived
// through this so the number of draws a sub-stage consumes never perturbs
// any other stage (keeps seeded runs byte-reproducible under memoization).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    return mix64(mix64(mix64(base ^ mix64(a)) ^ mix64(b)) ^ mix64(c));
}

// inclusive bounds
inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform_real(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool chance(Rng& rng, double p) { return uniform_real(rng) < p; }

}  // namespace rvrp
