#pragma once

#include <cstdint>
#include <cmath>
#include <complex>
#include <initializer_list>

namespace fbq {

// Deterministic splitmix64 stream with hashed substream derivation.
//
// Every random quantity in the project is drawn from a stream addressed by
// (master seed, path...), e.g. (seed, trial) for a channel draw or
// (seed, trial, entry) for one codebook entry.  Streams derived from
// distinct paths are statistically independent, and a value depends only on
// its own path, never on how many values other streams consumed.  That is
// what makes sweeps reproducible under any thread count and makes a B-bit
// codebook a prefix of the (B+1)-bit codebook drawn from the same path.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ kSeedTag)) {}

  Rng derive(std::uint64_t id) const {
    Rng r(0);
    r.state_ = mix64(state_ ^ mix64(id + kPathTag));
    r.has_spare_ = false;
    return r;
  }

  Rng derive(std::initializer_list<std::uint64_t> path) const {
    Rng r = *this;
    r.has_spare_ = false;
    for (std::uint64_t id : path) r = r.derive(id);
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64_raw(state_);
  }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard real normal, Marsaglia polar method
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // circularly symmetric complex normal with unit variance (E|z|^2 = 1)
  std::complex<double> complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re * kInvSqrt2, im * kInvSqrt2};
  }

 private:
  static constexpr std::uint64_t kSeedTag = 0xA0761D6478BD642FULL;
  static constexpr std::uint64_t kPathTag = 0xE7037ED1A0B428DBULL;
  static constexpr double kInvSqrt2 = 0.70710678118654752440;

  static std::uint64_t mix64_raw(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix64(std::uint64_t z) {
    return mix64_raw(z + 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fbq
