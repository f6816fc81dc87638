#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace hbws {

/// Counter-based splittable generator. Every draw is a finalizer hash of
/// (key, counter), so independent substreams can be derived by index without
/// sharing mutable state. All stochastic operations in the library take an
/// explicit Rng, which makes results reproducible bit-for-bit regardless of
/// how Monte Carlo work is sharded.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed) + 0x9e3779b97f4a7c15ull * (stream + 1))) {}

  /// Derives an independent substream; substream i of a given Rng is a pure
  /// function of (key, i).
  Rng split(std::uint64_t index) const { return Rng(key_, index + 1); }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++ctr_); }

  /// Uniform on [0, 1) with 53 bits of precision.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (platform-independent, unlike
  /// std::normal_distribution).
  double next_gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly-symmetric complex normal CN(0,1): real and imaginary parts
  /// are independent N(0, 1/2).
  std::complex<double> next_cgauss() {
    const double s = std::numbers::sqrt2 / 2.0;
    const double re = next_gauss();
    const double im = next_gauss();
    return {re * s, im * s};
  }

  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % bound;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hbws
