#pragma once

// Two-sample and one-sample goodness-of-fit tests with asymptotic p-values.
// Samples below 500 per side are flagged as conservative (the asymptotic
// regime is marginal there).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "crpmat/special.hpp"

namespace crpmat {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool conservative = false;
  std::size_t n_a = 0, n_b = 0;
};

namespace detail {
inline void check_sample(const std::vector<double>& x, const char* who) {
  if (x.size() < 100) throw std::invalid_argument(std::string(who) + ": need sample size >= 100");
  const double first = x.front();
  for (double v : x) {
    if (v != first) return;
  }
  throw std::invalid_argument(std::string(who) + ": degenerate (constant) sample");
}

inline double ks_p_from(double d, double n_eff) {
  const double sq = std::sqrt(n_eff);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  return kolmogorov_q(lambda);
}
}  // namespace detail

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  detail::check_sample(a, "ks_two_sample");
  detail::check_sample(b, "ks_two_sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double va = a[i];
    const double vb = b[j];
    if (va <= vb) {
      while (i < a.size() && a[i] == va) ++i;
    }
    if (vb <= va) {
      while (j < b.size() && b[j] == vb) ++j;
    }
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult out;
  out.statistic = d;
  out.n_a = a.size();
  out.n_b = b.size();
  out.p_value = detail::ks_p_from(d, na * nb / (na + nb));
  out.conservative = a.size() < 500 || b.size() < 500;
  return out;
}

inline KsResult ks_vs_normal(std::vector<double> a, double mean, double var) {
  detail::check_sample(a, "ks_vs_normal");
  if (!(var > 0.0)) throw std::invalid_argument("ks_vs_normal: var must be > 0");
  std::sort(a.begin(), a.end());
  const double sd = std::sqrt(var);
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = normal_cdf((a[i] - mean) / sd);
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
  }
  KsResult out;
  out.statistic = d;
  out.n_a = a.size();
  out.n_b = 0;
  out.p_value = detail::ks_p_from(d, n);
  out.conservative = a.size() < 500;
  return out;
}

struct Chi2Result {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
  std::size_t bins_used = 0;
  bool ok = false;
  std::string note;
};

// Two-sample chi-square over pre-binned paired counts. Bins with small
// pooled counts are merged (ascending by pooled count) into an overflow bin
// until the expected count per side is at least five everywhere; if that
// cannot be achieved the result carries ok = false and a diagnostic note.
inline Chi2Result chi2_two_sample(std::vector<std::pair<std::int64_t, std::int64_t>> bins) {
  Chi2Result out;
  double na = 0.0, nb = 0.0;
  for (const auto& [x, y] : bins) {
    na += static_cast<double>(x);
    nb += static_cast<double>(y);
  }
  if (na < 100 || nb < 100) throw std::invalid_argument("chi2_two_sample: need >= 100 per side");
  const double share_a = na / (na + nb);
  const double share_b = nb / (na + nb);
  const double min_pool = 5.0 / std::min(share_a, share_b);
  std::sort(bins.begin(), bins.end(), [](const auto& l, const auto& r) {
    return (l.first + l.second) < (r.first + r.second);
  });
  std::vector<std::pair<std::int64_t, std::int64_t>> merged;
  std::int64_t pool_a = 0, pool_b = 0;
  for (const auto& [x, y] : bins) {
    if (static_cast<double>(x + y) >= min_pool) {
      merged.emplace_back(x, y);
    } else {
      pool_a += x;
      pool_b += y;
      if (static_cast<double>(pool_a + pool_b) >= min_pool) {
        merged.emplace_back(pool_a, pool_b);
        pool_a = pool_b = 0;
      }
    }
  }
  if (pool_a + pool_b > 0) {
    if (static_cast<double>(pool_a + pool_b) >= min_pool) {
      merged.emplace_back(pool_a, pool_b);
    } else if (!merged.empty()) {
      merged.back().first += pool_a;
      merged.back().second += pool_b;
    }
  }
  if (merged.size() < 2) {
    out.ok = false;
    out.note = "fewer than two usable bins after merging";
    return out;
  }
  for (const auto& [x, y] : merged) {
    if (static_cast<double>(x + y) * share_a < 5.0 || static_cast<double>(x + y) * share_b < 5.0) {
      out.ok = false;
      out.note = "expected count below five after merging";
      return out;
    }
  }
  const double ra = std::sqrt(nb / na);
  const double rb = std::sqrt(na / nb);
  double stat = 0.0;
  for (const auto& [x, y] : merged) {
    const double diff = ra * static_cast<double>(x) - rb * static_cast<double>(y);
    stat += diff * diff / static_cast<double>(x + y);
  }
  out.statistic = stat;
  out.bins_used = merged.size();
  out.dof = merged.size() - 1;
  out.p_value = chi2_sf(stat, static_cast<double>(out.dof));
  out.ok = true;
  return out;
}

}  // namespace crpmat
