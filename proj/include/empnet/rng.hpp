#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Seeded randomness helpers. std::mt19937_64 has a standard-specified output
// sequence, but the std::*_distribution adapters do not, so all draws go
// through the explicit transforms below to keep results identical across
// standard libraries.

namespace empnet::rng {

using Engine = std::mt19937_64;

// One splitmix64 round; used to derive independent streams from (seed, tag).
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t below(Engine& g, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t v = g();
  while (v >= limit) v = g();
  return v % n;
}

// Standard normal via Box-Muller (cosine branch only, stateless).
inline double normal(Engine& g) {
  const double u1 = 1.0 - uniform01(g);  // (0, 1]
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace empnet::rng
