#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "stlab/special.hpp"

// Self-contained deterministic random streams. Standard-library
// distributions are implementation-defined, so everything that touches
// randomness is hand-rolled here: fixed algorithms give bit-identical
// artifacts for a fixed (seed, replicate) regardless of scheduling.

namespace stlab {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Per-replicate stream seed: a pure integer mix of (master seed, replicate
// index, stage tag). Parallel scheduling can never change which stream a
// replicate consumes.
inline uint64_t derive_seed(uint64_t master, uint64_t replicate,
                            std::string_view stage) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the stage tag
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  uint64_t s = master;
  uint64_t a = splitmix64(s);
  s = master ^ (0x9e3779b97f4a7c15ull * (replicate + 1));
  uint64_t b = splitmix64(s);
  s = h ^ a ^ (b + (replicate << 1));
  return splitmix64(s);
}

class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  // xoshiro256++
  uint64_t next_u64() {
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform on (0,1), 53-bit, never exactly 0 or 1
  double u01() {
    double u = (next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double exponential() { return -std::log(u01()); }

  // Poisson(lambda), exact: multiplication method for small lambda,
  // Hormann's PTRS transformed rejection otherwise.
  uint64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 10.0) {
      const double l = std::exp(-lambda);
      uint64_t k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= u01();
      } while (p > l);
      return k - 1;
    }
    return poisson_ptrs(lambda);
  }

 private:
  uint64_t poisson_ptrs(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double u = u01() - 0.5;
      double v = u01();
      double us = 0.5 - std::fabs(u);
      double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<uint64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kf * loglam - lambda - lgamma_fn(kf + 1.0))
        return static_cast<uint64_t>(kf);
    }
  }

  uint64_t state_[4];
};

}  // namespace stlab
