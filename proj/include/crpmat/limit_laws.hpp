#pragma once

// Analytic and quadrature oracles for the Gaussian limit objects: Sibuya
// pmf/pgf, covariances of the cycle-count limit processes Z_{alpha,j}(t) and
// Z_alpha(t), the log-characteristic-polynomial limit eta_alpha(z,t), and a
// Cholesky sampler for the limit law on a time grid.
//
// Every improper integral int_0^infty f(r) alpha r^{-alpha-1} dr is evaluated
// after the substitution r = e^u on a window chosen from the known decay
// rates of the integrand (power-law of order >= 1-alpha on the left,
// Poisson-tail death on the right), refined adaptively until the local error
// estimates certify the requested absolute tolerance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "crpmat/quadrature.hpp"
#include "crpmat/rng.hpp"
#include "crpmat/special.hpp"
#include "crpmat/weights.hpp"

namespace crpmat {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("limit_laws: requires alpha in (0,1)");
}

// P(Q_alpha = k) = alpha Gamma(k-alpha) / (Gamma(1-alpha) Gamma(k+1)).
inline double sibuya_pmf(double alpha, std::uint64_t k) {
  check_alpha(alpha);
  if (k == 0) throw std::invalid_argument("sibuya_pmf: support is k >= 1");
  const double kd = static_cast<double>(k);
  return std::exp(std::log(alpha) + lgamma_ts(kd - alpha) - lgamma_ts(1.0 - alpha) -
                  log_factorial(k));
}

// E z^{Q_alpha} = 1 - (1-z)^alpha, |z| < 1, principal power.
inline std::complex<double> sibuya_pgf(double alpha, std::complex<double> z) {
  check_alpha(alpha);
  if (!(std::abs(z) < 1.0)) throw std::invalid_argument("sibuya_pgf: requires |z| < 1");
  return 1.0 - std::pow(1.0 - z, alpha);
}

// P(Q_alpha > k), used for the pmf partial-sum checks.
inline double sibuya_tail(double alpha, std::uint64_t k) {
  check_alpha(alpha);
  const double kd = static_cast<double>(k);
  return std::exp(lgamma_ts(kd + 1.0 - alpha) - lgamma_ts(1.0 - alpha) - log_factorial(k));
}

// Closed form of Cov(Z_{alpha,j}(1), Z_{alpha,k}(1)):
// delta_{jk} alpha Gamma(j-alpha)/Gamma(j+1) - alpha 2^{alpha-j-k} Gamma(j+k-alpha)/(j! k!).
inline double cov_zj_closed(double alpha, std::uint64_t j, std::uint64_t k) {
  check_alpha(alpha);
  if (j == 0 || k == 0) throw std::invalid_argument("cov_zj_closed: need j,k >= 1");
  const double jd = static_cast<double>(j);
  const double kd = static_cast<double>(k);
  double v = -alpha * std::exp((alpha - jd - kd) * std::log(2.0) + lgamma_ts(jd + kd - alpha) -
                               log_factorial(j) - log_factorial(k));
  if (j == k) v += alpha * std::exp(lgamma_ts(jd - alpha) - log_factorial(j));
  return v;
}

// Cov(Z_{alpha,j}(s), Z_{alpha,k}(t)) by adaptive quadrature of
// int [P(N(rs)=j, N(rt)=k) - P(N(rs)=j)P(N(rt)=k)] alpha r^{-alpha-1} dr.
inline double cov_zj(double alpha, std::uint64_t j, std::uint64_t k, double s, double t,
                     double tol) {
  check_alpha(alpha);
  if (j == 0 || k == 0) throw std::invalid_argument("cov_zj: need j,k >= 1");
  if (!(s > 0.0) || !(t > 0.0)) throw std::invalid_argument("cov_zj: need s,t > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("cov_zj: tol must be > 0");
  if (s > t) {
    std::swap(s, t);
    std::swap(j, k);
  }
  const double jd = static_cast<double>(j);
  const double kd = static_cast<double>(k);
  // leading power of the integrand difference at r -> 0
  const double mstar = (k >= j) ? (k == j ? jd : kd) : jd + kd;
  const double u_lo = std::min(
      -40.0, (std::log(tol) - 8.0 - kd * std::max(0.0, std::log(t))) / (mstar - alpha));
  const double u_hi = std::max(7.0, std::log((810.0 + 60.0 * (jd + kd)) / s));
  const double dt = t - s;
  auto integrand = [&](double u) {
    const double r = std::exp(u);
    const double joint =
        k >= j ? poisson_pmf(r * s, j) * poisson_pmf(r * dt, k - j) : 0.0;
    const double prod = poisson_pmf(r * s, j) * poisson_pmf(r * t, k);
    return (joint - prod) * alpha * std::exp(-alpha * u);
  };
  const auto res = adaptive_integrate<double>(integrand, u_lo, u_hi, 0.7 * tol);
  if (!res.converged)
    throw NumericsError("cov_zj: quadrature did not reach the requested tolerance");
  return res.value;
}

namespace detail {
struct WindowPlan {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;  // inclusive; lo > hi means empty
};

inline WindowPlan plan_window(double mean, std::uint64_t support_end) {
  WindowPlan w;
  if (mean <= 0.0) {
    w.lo = 0;
    w.hi = 0;
    return w;
  }
  const double half = 10.0 * std::sqrt(mean) + 5.0;
  const double lo_d = std::floor(mean - half);
  w.lo = lo_d > 0.0 ? static_cast<std::uint64_t>(lo_d) : 0;
  w.hi = static_cast<std::uint64_t>(std::ceil(mean + half));
  if (support_end > 0 && w.hi >= support_end) w.hi = support_end - 1;
  return w;
}
}  // namespace detail

// Bilinear covariance oracle
//   int Cov(a_{N(rs)}, b_{N(rt)}) alpha r^{-alpha-1} dr
// for bounded weight sequences (complex values use the bilinear convention
// E XY - EX EY, matching stochastic-integral covariances). Inner Poisson
// expectations are truncated at mean +- 10 sqrt(mean). Weight/tolerance
// combinations whose inner windows would exceed the operation guard raise
// NumericsError; loosening tol shrinks the window.
template <class T>
T cov_weighted(double alpha, const BasicWeights<T>& wa, const BasicWeights<T>& wb, double s,
               double t, double tol, std::int64_t max_inner_ops = 40000000) {
  check_alpha(alpha);
  if (!(s > 0.0) || !(t > 0.0) || s > t)
    throw std::invalid_argument("cov_weighted: need 0 < s <= t");
  if (!(tol > 0.0)) throw std::invalid_argument("cov_weighted: tol must be > 0");
  if (!wa.bounded() || !wb.bounded())
    throw std::invalid_argument("cov_weighted: unbounded weights need a truncation table");
  const double ab_bound = std::max(1e-300, wa.bound() * wb.bound());
  // generic right tail: |Cov| <= 2 A B, integral tail 2AB e^{-alpha u}
  double u_hi = std::log(2.0 * ab_bound / (0.2 * tol)) / alpha;
  const std::uint64_t cf_a = wa.const_from();
  const std::uint64_t cf_b = wb.const_from();
  if (cf_a > 0 && cf_b > 0) {
    // randomness dies once both windows clear the constant region
    const auto cmax = static_cast<double>(std::max(cf_a, cf_b));
    const double m_dead = cmax + 10.0 * std::sqrt(cmax) + 45.0;
    u_hi = std::min(u_hi, std::log(m_dead / s) + 1.0);
  }
  const double u_lo = std::min(-40.0, (std::log(tol) - 8.0) / (1.0 - alpha));
  const double dt = t - s;

  // value tables to the largest window that can appear (the product window
  // for b reaches window(m1) + window(m2))
  const double m1_max = std::exp(u_hi) * s;
  const double m2_max = std::exp(u_hi) * dt;
  const auto need_a = detail::plan_window(m1_max, wa.support_end()).hi + 2;
  const auto need_b = detail::plan_window(m1_max, 0).hi +
                      detail::plan_window(m2_max, 0).hi + 4;
  const std::uint64_t cap_a = wa.support_end() > 0 ? wa.support_end() : need_a;
  const std::uint64_t cap_b = wb.support_end() > 0 ? wb.support_end() : need_b;
  const std::uint64_t len_a = std::min(need_a, cap_a);
  const std::uint64_t len_b = std::min(need_b, cap_b);
  if (len_a + len_b > static_cast<std::uint64_t>(max_inner_ops))
    throw NumericsError("cov_weighted: inner windows exceed the operation guard; loosen tol");
  const std::vector<T> ta = wa.value_table(len_a);
  const std::vector<T> tb = wb.value_table(len_b);
  auto aval = [&](std::uint64_t jj) { return jj < ta.size() ? ta[jj] : wa(jj); };
  auto bval = [&](std::uint64_t jj) { return jj < tb.size() ? tb[jj] : wb(jj); };

  auto integrand = [&](double u) -> T {
    const double r = std::exp(u);
    const double m1 = r * s;
    const double mt = r * t;
    const double m2 = r * dt;
    if (cf_a > 0 && cf_b > 0) {
      const double lo1 = m1 - 10.0 * std::sqrt(m1) - 5.0;
      if (lo1 >= static_cast<double>(std::max(cf_a, cf_b))) return T{};
    }
    const PoissonWindow w1 = poisson_window(m1);
    const PoissonWindow wt = poisson_window(mt);
    const PoissonWindow w2 = poisson_window(m2);
    if (static_cast<std::int64_t>(w1.pmf.size()) * static_cast<std::int64_t>(w2.pmf.size()) >
        max_inner_ops)
      throw NumericsError("cov_weighted: inner windows exceed the operation guard; loosen tol");
    T e1{};
    for (std::size_t i = 0; i < w1.pmf.size(); ++i) e1 += w1.pmf[i] * aval(w1.lo + i);
    T et{};
    for (std::size_t i = 0; i < wt.pmf.size(); ++i) et += wt.pmf[i] * bval(wt.lo + i);
    T e12{};
    for (std::size_t i = 0; i < w1.pmf.size(); ++i) {
      const T av = aval(w1.lo + i);
      if (av == T{}) continue;
      T inner{};
      for (std::size_t d = 0; d < w2.pmf.size(); ++d) {
        inner += w2.pmf[d] * bval(w1.lo + i + w2.lo + d);
      }
      e12 += w1.pmf[i] * av * inner;
    }
    return (e12 - e1 * et) * alpha * std::exp(-alpha * u);
  };
  const auto res = adaptive_integrate<T>(integrand, u_lo, u_hi, 0.7 * tol);
  if (!res.converged)
    throw NumericsError("cov_weighted: quadrature did not reach the requested tolerance");
  return res.value;
}

// Cov(Z_alpha(s), Z_alpha(t)) for a real weight sequence.
inline double cov_zalpha(double alpha, const Weights& w, double s, double t, double tol) {
  return cov_weighted<double>(alpha, w, w, s, t, tol);
}

// Closed form of Cov(Z_alpha(s), Z_alpha(t)) for a == 1 weights:
// Gamma(1-alpha) ((s+t)^alpha - t^alpha), s <= t.
inline double cov_const_closed(double alpha, double s, double t) {
  if (s > t) std::swap(s, t);
  return std::tgamma(1.0 - alpha) * (std::pow(s + t, alpha) - std::pow(t, alpha));
}

// Sibuya double-series formula for Cov(eta(z,1), eta(w,1)) (section 5 lemma):
// Gamma(1-alpha) sum_{u,v} (uv)^{-1} [ E(z^u w^v)^Q
//   - 2^alpha ( E((z^u+w^v)/2)^Q - E(z^u/2)^Q - E(w^v/2)^Q ) ].
inline std::complex<double> cov_eta_series(double alpha, std::complex<double> z,
                                           std::complex<double> w, double tol) {
  check_alpha(alpha);
  const double az = std::abs(z);
  const double aw = std::abs(w);
  if (!(az < 1.0) || !(aw < 1.0))
    throw std::invalid_argument("cov_eta_series: requires |z| < 1 and |w| < 1");
  if (!(tol > 0.0)) throw std::invalid_argument("cov_eta_series: tol must be > 0");
  if (az == 0.0 || aw == 0.0) return {0.0, 0.0};
  const double g1a = std::tgamma(1.0 - alpha);
  const double two_a = std::pow(2.0, alpha);
  const double kb = 8.0;  // |bracket| <= kb |z|^u |w|^v (loose)
  const double lw_sum = -std::log1p(-aw);
  std::complex<double> total{0.0, 0.0};
  std::complex<double> zu = 1.0;
  for (std::uint64_t u = 1;; ++u) {
    zu *= z;
    const double ud = static_cast<double>(u);
    const double u_tail =
        g1a * kb * std::pow(az, ud) / (ud * (1.0 - az)) * lw_sum;
    if (u_tail < 0.5 * tol && u > 4) break;
    if (u > 100000) throw NumericsError("cov_eta_series: truncation failed to converge");
    std::complex<double> wv = 1.0;
    for (std::uint64_t v = 1;; ++v) {
      wv *= w;
      const double vd = static_cast<double>(v);
      const double v_tail = g1a * kb * std::abs(zu) * std::pow(aw, vd) / (vd * (1.0 - aw));
      if (v_tail < 0.25 * tol / ud && v > 4) break;
      if (v > 100000) throw NumericsError("cov_eta_series: truncation failed to converge");
      const std::complex<double> x = zu;
      const std::complex<double> y = wv;
      const std::complex<double> bracket = 1.0 - std::pow(1.0 - x * y, alpha) + two_a +
                                           std::pow(2.0 - x - y, alpha) - std::pow(2.0 - x, alpha) -
                                           std::pow(2.0 - y, alpha);
      total += bracket / (ud * vd);
    }
  }
  return g1a * total;
}

// Quadrature route to Cov(eta(z,s), eta(w,t)) via the weighted oracle with
// a_j = log(1-z^j), b_j = log(1-w^j).
inline std::complex<double> cov_eta_quadrature(double alpha, std::complex<double> z,
                                               std::complex<double> w, double s, double t,
                                               double tol) {
  const ComplexWeights wa = log_charpoly_weights(z);
  const ComplexWeights wb = log_charpoly_weights(w);
  return cov_weighted<std::complex<double>>(alpha, wa, wb, s, t, tol);
}

// Full real covariance structure of (Re eta(z,s), Im eta(z,s)) against
// (Re eta(w,t), Im eta(w,t)); the real and imaginary parts are correlated.
struct ReImCov {
  double rr = 0.0, ri = 0.0, ir = 0.0, ii = 0.0;
};

inline ReImCov cov_eta_reim(double alpha, std::complex<double> z, std::complex<double> w, double s,
                            double t, double tol) {
  const ComplexWeights cz = log_charpoly_weights(z);
  const ComplexWeights cw = log_charpoly_weights(w);
  const Weights re_z = real_part(cz);
  const Weights im_z = imag_part(cz);
  const Weights re_w = real_part(cw);
  const Weights im_w = imag_part(cw);
  ReImCov out;
  out.rr = cov_weighted<double>(alpha, re_z, re_w, s, t, tol);
  out.ri = cov_weighted<double>(alpha, re_z, im_w, s, t, tol);
  out.ir = cov_weighted<double>(alpha, im_z, re_w, s, t, tol);
  out.ii = cov_weighted<double>(alpha, im_z, im_w, s, t, tol);
  return out;
}

// Dense symmetric covariance matrix on a labelled grid.
struct CovMatrix {
  std::vector<double> labels;
  std::size_t dim = 0;
  std::vector<double> m;  // row-major
  double tol = 0.0;       // certified per-entry quadrature error

  double at(std::size_t i, std::size_t j) const { return m[i * dim + j]; }
  double& at(std::size_t i, std::size_t j) { return m[i * dim + j]; }

  // Smallest eigenvalue by cyclic Jacobi (grids here are small).
  double min_eigenvalue() const {
    std::vector<double> a = m;
    const std::size_t n = dim;
    for (int sweep = 0; sweep < 100; ++sweep) {
      double off = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
      if (off < 1e-30) break;
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const double apq = a[p * n + q];
          if (std::fabs(apq) < 1e-300) continue;
          const double app = a[p * n + p];
          const double aqq = a[q * n + q];
          const double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
          const double c = std::cos(phi);
          const double sphi = std::sin(phi);
          for (std::size_t k = 0; k < n; ++k) {
            const double akp = a[k * n + p];
            const double akq = a[k * n + q];
            a[k * n + p] = c * akp - sphi * akq;
            a[k * n + q] = sphi * akp + c * akq;
          }
          for (std::size_t k = 0; k < n; ++k) {
            const double apk = a[p * n + k];
            const double aqk = a[q * n + k];
            a[p * n + k] = c * apk - sphi * aqk;
            a[q * n + k] = sphi * apk + c * aqk;
          }
        }
      }
    }
    double mn = a[0];
    for (std::size_t i = 1; i < n; ++i) mn = std::min(mn, a[i * n + i]);
    return mn;
  }
};

// Covariance matrix of Z_alpha over a time grid (symmetric fill).
inline CovMatrix cov_matrix_zalpha(double alpha, const Weights& w, const std::vector<double>& times,
                                   double tol) {
  CovMatrix out;
  out.labels = times;
  out.dim = times.size();
  out.tol = tol;
  out.m.assign(out.dim * out.dim, 0.0);
  for (std::size_t i = 0; i < out.dim; ++i) {
    for (std::size_t j = i; j < out.dim; ++j) {
      const double s = std::min(times[i], times[j]);
      const double t = std::max(times[i], times[j]);
      const double v = cov_weighted<double>(alpha, w, w, s, t, tol);
      out.at(i, j) = v;
      out.at(j, i) = v;
    }
  }
  return out;
}

// Lower Cholesky factor with escalating diagonal jitter (0, tol, 10 tol).
// Returns the factor and reports the jitter actually used.
inline std::vector<double> cholesky_jitter(const CovMatrix& cov, double* jitter_used = nullptr) {
  const std::size_t n = cov.dim;
  const double budget = 10.0 * cov.tol;
  for (double jitter : {0.0, 0.1 * budget, budget}) {
    std::vector<double> l(n * n, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j <= i && ok; ++j) {
        double sum = cov.at(i, j) + (i == j ? jitter : 0.0);
        for (std::size_t k = 0; k < j; ++k) sum -= l[i * n + k] * l[j * n + k];
        if (i == j) {
          if (sum <= 0.0) {
            ok = false;
            break;
          }
          l[i * n + i] = std::sqrt(sum);
        } else {
          l[i * n + j] = sum / l[j * n + j];
        }
      }
    }
    if (ok) {
      if (jitter_used) *jitter_used = jitter;
      return l;
    }
  }
  throw NumericsError("cholesky_jitter: matrix indefinite beyond the jitter budget");
}

// Seeded Gaussian sampler of the limit process on the grid of a CovMatrix.
class LimitProcessSampler {
 public:
  LimitProcessSampler(const CovMatrix& cov, std::uint64_t seed)
      : dim_(cov.dim), l_(cholesky_jitter(cov, &jitter_)), rng_(seed) {}

  std::size_t dim() const { return dim_; }
  double jitter() const { return jitter_; }

  std::vector<double> sample() {
    std::vector<double> xi(dim_);
    for (auto& v : xi) v = rng_.normal();
    std::vector<double> out(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += l_[i * dim_ + k] * xi[k];
      out[i] = s;
    }
    return out;
  }

 private:
  std::size_t dim_;
  double jitter_ = 0.0;
  std::vector<double> l_;
  RandomStream rng_;
};

}  // namespace crpmat
