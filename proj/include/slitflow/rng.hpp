#pragma once
// Counter-based random numbers. Every draw is a pure function of
// (seed, key...) so parallel ensembles and Brownian-bridge refinements are
// reproducible regardless of scheduling or evaluation order.

#include <cstdint>
#include <cmath>

#include "slitflow/common.hpp"

namespace slitflow::rng {

// SplitMix64 finalizer; good avalanche, cheap.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t keyed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0,
                      uint64_t d = 0, uint64_t e = 0) {
  uint64_t h = mix64(seed ^ 0xA0761D6478BD642Full);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  h = mix64(h ^ d);
  h = mix64(h ^ e);
  return h;
}

// uniform in (0,1), never exactly 0 or 1
inline double u01(uint64_t h) { return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53; }

// standard normal via Box-Muller (cosine half)
inline double normal(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0,
                     uint64_t d = 0) {
  double u1 = u01(keyed(seed, a, b, c, d, 1));
  double u2 = u01(keyed(seed, a, b, c, d, 2));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * PI * u2);
}

}  // namespace slitflow::rng
