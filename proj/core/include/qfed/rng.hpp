// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qfed {

// Deterministic random stream. All randomness in the library flows through
// this wrapper so a run is reproducible from a single master seed on any
// platform: doubles are built from raw 64-bit draws instead of
// std::uniform_real_distribution, whose exact output is implementation
// defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n > 0. Modulo bias is < n/2^64, irrelevant at
  // the sizes used here.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  int bit() { return static_cast<int>(next_u64() >> 63); }

  // Standard normal via Box-Muller on two raw draws.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // splitmix64 finalizer; used to derive well-separated child seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = mix(seed);
    h = mix(h ^ (a + 0x100000001b3ull));
    h = mix(h ^ (b + 0xcbf29ce484222325ull));
    h = mix(h ^ (c + 0x14650fb0739d0383ull));
    return h;
  }

  // Independent child stream keyed by (construction seed, purpose, fork
  // counter). Does not advance the main draw sequence.
  Rng fork(std::uint64_t purpose) {
    return Rng(derive(seed_, 0x666f726bull, purpose, forks_++));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  std::uint64_t forks_ = 0;
};

}  // namespace qfed
