#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rdball {

// Stream seeding and value mapping are spelled out here instead of relying on
// std::uniform_real_distribution / std::normal_distribution, whose output
// sequences are implementation defined. Runs must be reproducible byte for
// byte from (seed, stream tags) alone.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent engine from a base seed and up to three stream tags.
inline std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t a = 0,
                                     std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = seed;
  std::uint64_t x = splitmix64(s);
  s ^= a * 0xD1342543DE82EF95ull;
  x ^= splitmix64(s);
  s ^= b * 0xAF251AF3B0F025B5ull;
  x ^= splitmix64(s);
  s ^= c * 0x9E3779B97F4A7C15ull;
  x ^= splitmix64(s);
  return std::mt19937_64(x);
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Standard normal via Box-Muller; consumes two engine draws.
inline double standard_normal(std::mt19937_64& gen) {
  double u1 = uniform01(gen);
  while (u1 <= 0.0) u1 = uniform01(gen);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace rdball
