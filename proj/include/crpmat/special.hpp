#pragma once

// Scalar special functions shared by the samplers and the covariance oracles:
// log-gamma based pmfs, Riemann zeta with Euler-Maclaurin tails, regularized
// incomplete gamma, and the Kolmogorov distribution.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace crpmat {

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thread-safe lgamma (avoids the signgam global written by ::lgamma).
inline double lgamma_ts(double x) {
#if defined(__GLIBC__) || defined(__linux__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

// log(n!), cached for small n.
inline double log_factorial(std::uint64_t n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(1 << 16);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (n < table.size()) return table[n];
  return lgamma_ts(static_cast<double>(n) + 1.0);
}

inline double lchoose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// Generalized binomial coefficient binom(x, m) = x(x-1)...(x-m+1)/m! for real x.
inline double gen_binom(double x, std::uint64_t m) {
  double num = 1.0;
  for (std::uint64_t i = 0; i < m; ++i) num *= (x - static_cast<double>(i));
  return num * std::exp(-log_factorial(m));
}

inline double poisson_log_pmf(double mean, std::uint64_t k) {
  if (mean == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -mean + static_cast<double>(k) * std::log(mean) - log_factorial(k);
}

inline double poisson_pmf(double mean, std::uint64_t k) {
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(poisson_log_pmf(mean, k));
}

// Poisson pmf on the window mean +- nsig*sqrt(mean); mass outside is below
// exp(-nsig^2/2) which is ~1e-22 at the default width. Values are anchored at
// the mode and filled by the two-term recurrence.
struct PoissonWindow {
  std::uint64_t lo = 0;
  std::vector<double> pmf;
  std::uint64_t hi() const { return lo + pmf.size() - 1; }
};

inline PoissonWindow poisson_window(double mean, double nsig = 10.0) {
  PoissonWindow w;
  if (mean <= 0.0) {
    w.lo = 0;
    w.pmf = {1.0};
    return w;
  }
  const double half = nsig * std::sqrt(mean) + 5.0;
  const double lo_d = std::floor(mean - half);
  w.lo = lo_d > 0.0 ? static_cast<std::uint64_t>(lo_d) : 0;
  const auto hi = static_cast<std::uint64_t>(std::ceil(mean + half));
  w.pmf.assign(hi - w.lo + 1, 0.0);
  auto anchor = static_cast<std::uint64_t>(mean);
  if (anchor < w.lo) anchor = w.lo;
  if (anchor > hi) anchor = hi;
  const std::size_t ai = anchor - w.lo;
  w.pmf[ai] = poisson_pmf(mean, anchor);
  for (std::size_t i = ai; i + 1 < w.pmf.size(); ++i) {
    const double k1 = static_cast<double>(w.lo + i) + 1.0;
    w.pmf[i + 1] = w.pmf[i] * mean / k1;
  }
  for (std::size_t i = ai; i > 0; --i) {
    const double k = static_cast<double>(w.lo + i);
    w.pmf[i - 1] = w.pmf[i] * k / mean;
  }
  return w;
}

namespace detail {
// Euler-Maclaurin tail sum_{j>=N} j^{-s} for N reasonably large.
inline double zeta_tail_em(double s, double n) {
  const double b[] = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0};
  double tail = std::pow(n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(n, -s);
  double rising = s;                       // (s)_{2k-1}
  double fact = 2.0;                       // (2k)!
  double npow = std::pow(n, -s - 1.0);     // n^{-s-2k+1}
  for (int k = 1; k <= 6; ++k) {
    tail += b[k - 1] / fact * rising * npow;
    rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
    fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    npow /= n * n;
  }
  return tail;
}
}  // namespace detail

// Sum_{j >= from} j^{-s}, s > 1. Certified error well below 1e-13 in the
// parameter ranges used here (s = 1/alpha with alpha in (0,1)).
inline double zeta_tail_from(double s, std::uint64_t from) {
  if (!(s > 1.0)) throw std::invalid_argument("zeta_tail_from: requires s > 1");
  if (from == 0) from = 1;
  const std::uint64_t pivot = 64;
  double head = 0.0;
  std::uint64_t n = from;
  while (n < pivot) {
    head += std::pow(static_cast<double>(n), -s);
    ++n;
  }
  return head + detail::zeta_tail_em(s, static_cast<double>(n));
}

inline double riemann_zeta(double s) { return zeta_tail_from(s, 1); }

// Regularized incomplete gamma functions (series / continued fraction).
namespace detail {
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - lgamma_ts(a));
}

inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - lgamma_ts(a));
}
}  // namespace detail

// Q(a,x) = Gamma(a,x)/Gamma(a), the upper regularized incomplete gamma.
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Survival function of the chi-square distribution with dof degrees.
inline double chi2_sf(double stat, double dof) { return gamma_q(0.5 * dof, 0.5 * stat); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

// Kolmogorov distribution Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.18) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  const double q = 2.0 * sum;
  return q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q);
}

}  // namespace crpmat
