#pragma once

// Spectral statistics of permutation matrices computed from cycle counts:
// log characteristic polynomial off the unit circle, logarithmic potential,
// eigenvalue multiplicities, and secular coefficients.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crpmat/special.hpp"

namespace crpmat {

using SparseCounts = std::vector<std::pair<std::uint64_t, std::int64_t>>;

inline std::uint64_t counts_size(const SparseCounts& counts) {
  std::uint64_t n = 0;
  for (const auto& [j, c] : counts) n += j * static_cast<std::uint64_t>(c);
  return n;
}

// log det(I - z M_n) via the cycle factorization prod_j (1 - z^j)^{C_{n,j}}.
// Inside the disc this is sum_j C_j log(1 - z^j) (principal branch); outside,
// n log z + sum_j C_j log(z^{-j} - 1), the n log z part being the drift term.
inline std::complex<double> log_char_poly(const SparseCounts& counts, std::complex<double> z) {
  const double az = std::abs(z);
  if (az == 1.0) throw std::invalid_argument("log_char_poly: |z| = 1 is out of scope");
  std::complex<double> s{0.0, 0.0};
  if (az < 1.0) {
    for (const auto& [j, c] : counts) {
      s += static_cast<double>(c) * std::log(1.0 - std::pow(z, static_cast<double>(j)));
    }
    return s;
  }
  const std::complex<double> zi = 1.0 / z;
  for (const auto& [j, c] : counts) {
    s += static_cast<double>(c) * std::log(std::pow(zi, static_cast<double>(j)) - 1.0);
  }
  return static_cast<double>(counts_size(counts)) * std::log(z) + s;
}

// U_n(z) = -(1/n) sum_j C_j log|z^j - 1|. The limit values are -log|z| for
// |z| >= 1 and 0 for |z| < 1 (Jensen's formula).
inline double log_potential(const SparseCounts& counts, std::complex<double> z) {
  const double az = std::abs(z);
  if (az == 1.0) throw std::invalid_argument("log_potential: |z| = 1 is out of scope");
  const std::uint64_t n = counts_size(counts);
  if (n == 0) throw std::invalid_argument("log_potential: empty counts");
  double s = 0.0;
  for (const auto& [j, c] : counts) {
    const double m = std::abs(std::pow(z, static_cast<double>(j)) - 1.0);
    if (m == 0.0) throw NumericsError("log_potential: z is a root of unity hit by a cycle");
    s += static_cast<double>(c) * std::log(m);
  }
  return -s / static_cast<double>(n);
}

inline double log_potential_limit(std::complex<double> z) {
  const double az = std::abs(z);
  return az >= 1.0 ? -std::log(az) : 0.0;
}

// Multiplicity of the eigenvalue e^{i 2 pi p / n}: sum of C_{n,j} over the
// cycle lengths j with n | p*j.
inline std::int64_t eigenvalue_multiplicity(const SparseCounts& counts, std::uint64_t p,
                                            std::uint64_t n) {
  if (p >= n) throw std::invalid_argument("eigenvalue_multiplicity: need 0 <= p < n");
  std::int64_t m = 0;
  for (const auto& [j, c] : counts) {
    if ((p * j) % n == 0) m += c;
  }
  return m;
}

// Power-series coefficients of prod_{j<=J} (1 - z^j)^{c_j} up to order K,
// real exponents via the generalized binomial series. Factors with j > K
// cannot touch orders <= K and are skipped.
inline std::vector<double> secular_coeffs(const std::vector<double>& exponents, std::size_t order) {
  std::vector<double> out(order + 1, 0.0);
  out[0] = 1.0;
  for (std::size_t j = 1; j <= exponents.size() && j <= order; ++j) {
    const double c = exponents[j - 1];
    if (c == 0.0) continue;
    // (1 - z^j)^c = sum_m binom(c,m) (-1)^m z^{jm}
    std::vector<double> next(order + 1, 0.0);
    for (std::size_t m = 0; m * j <= order; ++m) {
      const double coef = (m % 2 == 0 ? 1.0 : -1.0) * gen_binom(c, m);
      if (coef == 0.0) continue;
      for (std::size_t q = 0; q + m * j <= order; ++q) {
        next[q + m * j] += coef * out[q];
      }
    }
    out.swap(next);
  }
  return out;
}

namespace detail {
inline void pk_rec(const std::vector<double>& x, std::uint64_t j, std::uint64_t rem, double prod,
                   double& total) {
  if (rem == 0) {
    total += prod;
    return;
  }
  if (j == 0) return;
  for (std::uint64_t m = 0; m * j <= rem; ++m) {
    const double factor = m == 0 ? 1.0 : (m % 2 == 0 ? 1.0 : -1.0) * gen_binom(x[j - 1], m);
    pk_rec(x, j - 1, rem - m * j, prod * factor, total);
  }
}
}  // namespace detail

// P_k in the power-series-coefficient convention: the sum over compositions
// sum j*m_j = k of prod (-1)^{m_j} binom(x_j, m_j). Equals
// secular_coeffs(x, k)[k] by construction.
inline double pk_polynomial(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("pk_polynomial: need k >= 1 values");
  double total = 0.0;
  const auto k = static_cast<std::uint64_t>(x.size());
  detail::pk_rec(x, k, k, 1.0, total);
  return total;
}

}  // namespace crpmat
