// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_RANDOM_HPP_
#define ARNSE_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace arnse {

// The standard distributions are implementation-defined; these helpers keep
// every random draw reproducible across standard libraries.

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream seed for item `index` of a run seeded with `seed`.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(seed ^ SplitMix64(index));
}

inline double UnitUniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * UnitUniform(rng());
}

// Uniform integer in [0, n).
inline std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(UnitUniform(rng()) * static_cast<double>(n)) % n;
}

inline double Gaussian(std::mt19937_64& rng) {
  double u1 = UnitUniform(rng());
  const double u2 = UnitUniform(rng());
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace arnse

#endif  // ARNSE_RANDOM_HPP_
