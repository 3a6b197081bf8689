// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace mimogan {

// Counter-based generator: each output is a hash of (key, counter), so a
// stream can be split with derive() and the draws of one stream never depend
// on how many draws another stream made.  Batched and sequential generation
// of the same (seed, stream) therefore produce identical values.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  /// Independent child stream; derive(a).derive(b) != derive(b).derive(a).
  [[nodiscard]] CounterRng derive(std::uint64_t stream) const {
    CounterRng r(0);
    r.key_ = mix(key_ ^ mix(stream ^ 0xd1b54a32d192ed03ull));
    r.ctr_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return mix(key_ ^ mix(ctr_++ ^ 0x94d049bb133111ebull)); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (two uniforms per pair, no caching).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// CN(0,1): real and imaginary parts iid N(0, 1/2).
  std::complex<double> cnormal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));  // sqrt(-2 ln u) / sqrt(2)
    return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  double uniform_pos() {
    double u = uniform();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

/// Deterministic Fisher-Yates shuffle.
template <typename Vec>
void shuffle(Vec& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace mimogan
