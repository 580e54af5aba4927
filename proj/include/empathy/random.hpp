#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace empathy {

/// Generator used everywhere a seed is accepted. Draws go through the helpers
/// below so results do not depend on the standard library's distributions.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n) by rejection sampling.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t v;
  do v = rng(); while (v >= limit);
  return v % n;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform real in [0, 1].
inline double uniform_closed01(Rng& rng) {
  return static_cast<double>(rng() >> 11) / static_cast<double>((std::uint64_t{1} << 53) - 1);
}

/// Standard normal via Box-Muller.
double standard_normal(Rng& rng);

/// Seed for a named sub-stream of `base` (FNV-1a of the name mixed with splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::string_view name);

}  // namespace empathy
