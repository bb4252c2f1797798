#pragma once

// Deterministic random number utilities.
//
// All stochastic code in the library draws through RandomStream, which wraps
// std::mt19937_64 (the engine is fully specified by the standard, so streams
// are bit-stable across platforms for a given seed) and generates every
// variate by an explicit, documented method rather than through the
// implementation-defined <random> distributions.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace crpmat {

// Stafford mix13 finalizer (the SplitMix64 output function). Bijective.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Derives the seed of stream `index` from a master seed.
// For a fixed master the map index -> seed is a composition of bijections,
// so distinct indices can never collide.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1).
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Uniform integer in [0, bound), unbiased (Lemire multiply-shift with
  // rejection of the short range).
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound == 0");
    unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(eng_()) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller, cosine branch only.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia-Tsang squeeze method; shapes below one use the standard
  // boost G(a) = G(a+1) * U^{1/a}.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Exact Binomial(r, p) by geometric waiting times between successes,
  // O(successes + 1) per draw.
  std::uint64_t binomial_waiting(std::uint64_t r, double p) {
    if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("binomial_waiting: bad p");
    if (p == 0.0 || r == 0) return 0;
    if (p == 1.0) return r;
    const double lq = std::log1p(-p);
    std::uint64_t k = 0;
    double pos = 0.0;
    const auto rd = static_cast<double>(r);
    for (;;) {
      pos += std::floor(std::log(uniform_pos()) / lq);
      if (pos >= rd) break;
      ++k;
      pos += 1.0;
      if (pos >= rd) break;
    }
    return k;
  }

  // Beta(a,b) as Ga/(Ga+Gb). The result is nudged into the open interval so
  // that stick-breaking never produces a zero frequency or zero tail.
  double beta(double a, double b) {
    double x, y;
    do {
      x = gamma(a);
      y = gamma(b);
    } while (!(x + y > 0.0));
    double r = x / (x + y);
    if (r <= 0.0) r = 1e-300;
    if (r >= 1.0) r = 1.0 - 1e-16;
    return r;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace crpmat
