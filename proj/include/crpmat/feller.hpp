#pragma once

// Feller coupling for the (0,theta) model. The Bernoulli sequence
// xi_i ~ Bernoulli(theta/(theta+i-1)) is sampled sparsely through its exact
// inter-success law (the survival product telescopes into a Gamma ratio), so
// horizons far beyond n cost only O(theta log H) draws. Spacings between
// successes within [1,n] give the coupled cycle counts; spacings within the
// horizon give the limit Poisson variables W_j.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "crpmat/rng.hpp"
#include "crpmat/special.hpp"

namespace crpmat {

struct FellerDraw {
  std::vector<std::pair<std::uint64_t, std::int64_t>> c_hat;  // sparse (j, C-hat_{n,j})
  std::vector<std::int64_t> w;                                // W_1..W_{m_max}
  std::uint64_t horizon = 0;
};

namespace detail {
// P(no success in (i, m]) = Gamma(m)Gamma(theta+i) / (Gamma(i)Gamma(theta+m)),
// with the i-dependent log-gammas precomputed by the caller.
inline double feller_survival(double theta, std::uint64_t m, double lg_i, double lg_ti) {
  const double md = static_cast<double>(m);
  return std::exp(lgamma_ts(md) - lg_i + lg_ti - lgamma_ts(theta + md));
}

// Next success position strictly after i, or 0 if it exceeds `horizon`.
inline std::uint64_t feller_next_success(double theta, std::uint64_t i, std::uint64_t horizon,
                                         RandomStream& rng) {
  const double u = rng.uniform_pos();
  const double lg_i = lgamma_ts(static_cast<double>(i));
  const double lg_ti = lgamma_ts(theta + static_cast<double>(i));
  auto survival = [&](std::uint64_t m) { return feller_survival(theta, m, lg_i, lg_ti); };
  if (survival(i + 1) < u) return i + 1;
  std::uint64_t lo = i + 1;  // survival(lo) >= u
  std::uint64_t hi = lo;
  std::uint64_t span = 1;
  for (;;) {
    hi = lo + span;
    if (hi > horizon) {
      if (survival(horizon) >= u) return 0;  // no success within the horizon
      hi = horizon;
      break;
    }
    if (survival(hi) < u) break;
    lo = hi;
    span *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (survival(mid) >= u ? lo : hi) = mid;
  }
  return hi;
}
}  // namespace detail

// Success positions of the Bernoulli sequence up to `horizon` (xi_1 = 1).
inline std::vector<std::uint64_t> feller_successes(double theta, std::uint64_t horizon,
                                                   RandomStream& rng) {
  std::vector<std::uint64_t> s{1};
  for (;;) {
    const std::uint64_t next = detail::feller_next_success(theta, s.back(), horizon, rng);
    if (next == 0) break;
    s.push_back(next);
  }
  return s;
}

inline FellerDraw feller_coupling(double theta, std::uint64_t n, std::uint64_t m_max,
                                  std::uint64_t seed, double w_tail_prob = 1e-6) {
  if (!(theta > 0.0)) throw std::invalid_argument("feller_coupling: requires theta > 0");
  if (n == 0) throw std::invalid_argument("feller_coupling: n must be >= 1");
  if (!(w_tail_prob > 0.0)) throw std::invalid_argument("feller_coupling: bad tail probability");
  FellerDraw out;
  // Missing-pair probability beyond H is below theta^2/(H-1).
  const double h_d = std::max(2.0 * static_cast<double>(n), theta * theta / w_tail_prob + 1.0);
  out.horizon = static_cast<std::uint64_t>(h_d);
  RandomStream rng(seed);
  const std::vector<std::uint64_t> succ = feller_successes(theta, out.horizon, rng);

  std::vector<std::int64_t> ch;  // dense C-hat by spacing length
  auto bump = [&ch](std::uint64_t j) {
    if (j >= ch.size()) ch.resize(j + 1, 0);
    ++ch[j];
  };
  out.w.assign(m_max, 0);
  for (std::size_t k = 0; k + 1 < succ.size(); ++k) {
    const std::uint64_t gap = succ[k + 1] - succ[k];
    if (succ[k + 1] <= n) bump(gap);
    if (gap <= m_max) ++out.w[gap - 1];
  }
  // boundary spacing: the last success within [1,n] owns [s_last, n]
  std::uint64_t last = 0;
  for (std::uint64_t s : succ) {
    if (s <= n) last = s;
  }
  bump(n - last + 1);
  for (std::uint64_t j = 1; j < ch.size(); ++j) {
    if (ch[j] != 0) out.c_hat.emplace_back(j, ch[j]);
  }
  return out;
}

}  // namespace crpmat
