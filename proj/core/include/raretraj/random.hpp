#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace raretraj {

using Rng = std::mt19937_64;

// Independent stream per (seed, stream) pair; the seed_seq mixing keeps
// neighbouring agent indices decorrelated.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  return Rng(seq);
}

// The std distributions are implementation-defined; these are not, which
// keeps CSV outputs byte-identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline double normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace raretraj
