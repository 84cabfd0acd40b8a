// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_RNG_HPP_
#define SODASR_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace sodasr {

// Deterministic RNG. mt19937_64 is fully specified by the standard, so
// streams reproduce across platforms. Distribution transforms are done by
// hand because std:: distributions are implementation defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), eng_(mix(seed)) {}

  uint64_t next_u64() { return eng_(); }

  // [0,1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // (0,1), safe for log()
  double uniform_open() { return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // [lo, hi)
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + (int64_t)(uniform() * (double)(hi - lo));
  }

  // Box-Muller, one value per call.
  double normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Standard Gumbel: g = -log(-log(u)), u in (0,1).
  double gumbel() { return -std::log(-std::log(uniform_open())); }

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream named by label. Depends only on the parent
  // seed, not on how much the parent has been consumed.
  Rng fork(std::string_view label) const {
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (char c : label) {
      h ^= (uint8_t)c;
      h *= 1099511628211ull;
    }
    return Rng(mix(seed_ ^ h));
  }

  Rng fork(uint64_t index) const { return Rng(mix(seed_ + 0x9e3779b97f4a7c15ull * (index + 1))); }

  uint64_t seed() const { return seed_; }

 private:
  static uint64_t mix(uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace sodasr

#endif  // SODASR_RNG_HPP_
