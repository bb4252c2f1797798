#pragma once

// Occupancy simulation for the infinite urn scheme (balls thrown i.i.d. with
// the source frequencies), conditional occupancy means used as centering
// terms, and the regular-variation constant estimator.

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "crpmat/crp.hpp"
#include "crpmat/frequencies.hpp"
#include "crpmat/rng.hpp"
#include "crpmat/special.hpp"

namespace crpmat {

// D_{n,j} bookkeeping has the same shape as cycle counts: by_size[j] is the
// number of urns holding exactly j balls and blocks is the occupied-urn count.
using OccupancyCounts = CycleCounts;
using OccupancyTrajectory = CycleTrajectory;

// Throws n balls into a (possibly growing) source, exact inverse-CDF path.
// hook.on_promote(c) fires when an urn moves from c to c+1 balls and
// hook.at_checkpoint(i, m, counts) at every m = floor(n * t_i).
template <class Hook>
void run_urn(FrequencySource& src, std::uint64_t n, const std::vector<double>& checkpoints,
             std::uint64_t seed, Hook&& hook) {
  validate_checkpoints(checkpoints);
  RandomStream rng(seed);
  std::vector<std::uint32_t> balls;
  OccupancyCounts occ;
  std::size_t next_ck = 0;
  auto fire = [&] {
    while (next_ck < checkpoints.size()) {
      const auto m = static_cast<std::uint64_t>(static_cast<double>(n) * checkpoints[next_ck]);
      if (m != occ.total) break;
      hook.at_checkpoint(next_ck, occ.total, occ);
      ++next_ck;
    }
  };
  fire();
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t id = src.sample_index(rng.uniform());
    std::uint32_t old;
    if (id == FrequencySource::kVirtualUrn) {
      old = 0;  // frozen stick-breaking tail: fresh singleton urn
    } else {
      if (id >= balls.size()) balls.resize(id + 1, 0);
      old = balls[id]++;
    }
    occ.promote(old);
    hook.on_promote(old);
    fire();
  }
}

// Reusable per-replica buffers for the frozen fast path.
struct UrnScratch {
  std::vector<std::uint32_t> balls;
  std::vector<std::uint64_t> touched;
  std::unordered_map<std::uint64_t, std::uint32_t> far;
  OccupancyCounts occ;
  std::uint64_t max_count_seen = 0;

  void reset(std::size_t prefix_len) {
    for (std::uint64_t id : touched) balls[id] = 0;
    touched.clear();
    far.clear();
    if (balls.size() < prefix_len) balls.assign(prefix_len, 0);
    const std::size_t used = max_count_seen + 2;
    if (occ.by_size.size() > used) {
      std::fill(occ.by_size.begin(), occ.by_size.begin() + used, 0);
    } else {
      std::fill(occ.by_size.begin(), occ.by_size.end(), 0);
    }
    occ.blocks = 0;
    occ.total = 0;
    max_count_seen = 0;
  }
};

namespace detail {
template <class Hook, class = void>
struct hook_needs_histogram : std::true_type {};
template <class Hook>
struct hook_needs_histogram<Hook, std::void_t<decltype(Hook::needs_histogram)>>
    : std::bool_constant<Hook::needs_histogram> {};
}  // namespace detail

// Same contract as run_urn but over a frozen source via its alias sampler.
// Hooks that only consume promote events may declare
// `needs_histogram = false` (member enum or constant) to skip the D_{n,j}
// bookkeeping (the occupied count and total stay exact either way).
template <class Hook>
void run_urn_frozen(const FrozenSampler& sampler, std::uint64_t n,
                    const std::vector<double>& checkpoints, std::uint64_t seed, UrnScratch& scr,
                    Hook&& hook) {
  constexpr bool kHistogram = detail::hook_needs_histogram<std::decay_t<Hook>>::value;
  validate_checkpoints(checkpoints);
  RandomStream rng(seed);
  scr.reset(sampler.prefix_len());
  OccupancyCounts& occ = scr.occ;
  std::size_t next_ck = 0;
  auto fire = [&] {
    while (next_ck < checkpoints.size()) {
      const auto m = static_cast<std::uint64_t>(static_cast<double>(n) * checkpoints[next_ck]);
      if (m != occ.total) break;
      hook.at_checkpoint(next_ck, occ.total, occ);
      ++next_ck;
    }
  };
  fire();
  const std::size_t prefix = sampler.prefix_len();
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t id = sampler.sample(rng);
    std::uint32_t old;
    if (id == FrequencySource::kVirtualUrn) {
      old = 0;
    } else if (id < prefix) {
      old = scr.balls[id]++;
      if (old == 0) scr.touched.push_back(id);
    } else {
      old = scr.far[id]++;
    }
    if constexpr (kHistogram) {
      if (old >= scr.max_count_seen) scr.max_count_seen = old + 1;
      occ.promote(old);
    } else {
      if (old == 0) ++occ.blocks;
      ++occ.total;
    }
    hook.on_promote(old);
    fire();
  }
}

inline OccupancyTrajectory sample_urn(FrequencySource& src, std::uint64_t n,
                                      const std::vector<double>& checkpoints,
                                      std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_urn: n must be >= 1");
  OccupancyTrajectory traj;
  traj.n = n;
  traj.checkpoints = checkpoints;
  detail::TrajectoryHook hook{&traj};
  run_urn(src, n, checkpoints, seed, hook);
  return traj;
}

// E(D_{n,j} | P) = sum_l binom(n,j) P_l^j (1-P_l)^{n-j}. For j >= 2 the sum
// is truncated once binom(n,j) * (max remaining P)^{j-1} * tail_mass drops
// below tol. For j = 1 that bound is tight and decays only like the tail, so
// the remainder, bracketed by n*tail*(1-maxP)^{n-1} and n*tail, is completed
// by its midpoint once the bracket width certifies tol.
inline double conditional_occupancy_mean(FrequencySource& src, std::uint64_t n, std::uint64_t j,
                                         double tol) {
  if (j < 1 || j > n) throw std::invalid_argument("conditional_occupancy_mean: need 1 <= j <= n");
  if (!(tol > 0.0)) throw std::invalid_argument("conditional_occupancy_mean: tol must be > 0");
  const double nd = static_cast<double>(n);
  const double lbin = lchoose(n, j);
  const double ltol = std::log(tol);
  const std::size_t guard = std::size_t{1} << 27;
  double sum = 0.0;
  for (std::size_t l = 0;; ++l) {
    const double tail = src.tail_after(l);
    if (tail <= 0.0) break;
    const double maxp = src.max_frequency_from(l);
    if (j == 1) {
      const double survive = std::exp((nd - 1.0) * std::log1p(-maxp));
      const double hi = nd * tail;
      const double lo = hi * survive;
      if (0.5 * (hi - lo) < tol) {
        sum += 0.5 * (hi + lo);
        break;
      }
    } else {
      const double lbound = lbin + static_cast<double>(j - 1) * std::log(maxp) + std::log(tail);
      if (lbound < ltol) break;
    }
    if (l >= guard) throw NumericsError("conditional_occupancy_mean: truncation bound not reached");
    const double p = src.frequency(l);
    sum += std::exp(lbin + static_cast<double>(j) * std::log(p) +
                    static_cast<double>(n - j) * std::log1p(-p));
  }
  return sum;
}

// E(K_n | P) = sum_l (1 - (1-P_l)^n). The remainder over the tail urns is
// bracketed by [n*tail*(1-maxP)^{n-1}, n*tail] and completed by the midpoint
// once the bracket width certifies tol.
inline double occupied_mean(FrequencySource& src, std::uint64_t n, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("occupied_mean: tol must be > 0");
  const double nd = static_cast<double>(n);
  const std::size_t guard = std::size_t{1} << 27;
  double sum = 0.0;
  for (std::size_t l = 0;; ++l) {
    const double tail = src.tail_after(l);
    const double maxp = src.max_frequency_from(l);
    const double survive = std::exp((nd - 1.0) * std::log1p(-maxp));
    const double hi = nd * tail;
    const double lo = hi * survive;
    if (0.5 * (hi - lo) < tol) {
      sum += 0.5 * (hi + lo);
      break;
    }
    if (l >= guard) throw NumericsError("occupied_mean: truncation bound not reached");
    const double p = src.frequency(l);
    sum += -std::expm1(nd * std::log1p(-p));
  }
  return sum;
}

// sum_l E a(Bin(n, P_l)) for a bounded weight evaluator with a(0) = 0.
// `bound` is sup_j |a_j|; `support_end` > 0 marks a_j == 0 for j >= support_end.
// The remainder over the tail urns is completed at first order,
// a_1 * n * tail * midpoint-survival, with the certified error combining the
// bracket width and an A * n^2 * maxP * tail / 2 bound on multi-ball terms.
template <class T, class Eval>
T weighted_occupancy_mean(FrequencySource& src, Eval&& a, double bound, std::uint64_t support_end,
                          std::uint64_t n, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("weighted_occupancy_mean: tol must be > 0");
  const double nd = static_cast<double>(n);
  const std::size_t guard = std::size_t{1} << 27;
  T sum{};
  for (std::size_t l = 0;; ++l) {
    const double tail = src.tail_after(l);
    const double maxp = src.max_frequency_from(l);
    const double survive = std::exp((nd - 1.0) * std::log1p(-maxp));
    const double a1_abs = std::abs(a(1));
    const double err = 0.5 * a1_abs * nd * tail * (1.0 - survive) +
                       0.5 * bound * nd * nd * maxp * tail;
    if (err < tol) {
      sum += a(1) * (nd * tail * 0.5 * (1.0 + survive));
      break;
    }
    if (l >= guard) throw NumericsError("weighted_occupancy_mean: truncation bound not reached");
    const double p = src.frequency(l);
    const double mean = static_cast<double>(n) * p;
    const double sd = std::sqrt(mean * (1.0 - p));
    const double lo_d = std::floor(mean - 10.0 * sd - 5.0);
    std::uint64_t lo = lo_d > 1.0 ? static_cast<std::uint64_t>(lo_d) : 1;
    auto hi = static_cast<std::uint64_t>(std::ceil(mean + 10.0 * sd + 5.0));
    if (hi > n) hi = n;
    if (support_end > 0) {
      if (lo >= support_end) continue;
      if (hi >= support_end) hi = support_end - 1;
    }
    if (lo > hi) continue;
    auto anchor = static_cast<std::uint64_t>((static_cast<double>(n) + 1.0) * p);
    if (anchor < lo) anchor = lo;
    if (anchor > hi) anchor = hi;
    const double lpmf = lchoose(n, anchor) + static_cast<double>(anchor) * std::log(p) +
                        static_cast<double>(n - anchor) * std::log1p(-p);
    const double odds = p / (1.0 - p);
    double pmf = std::exp(lpmf);
    T term{};
    double q = pmf;
    for (std::uint64_t k = anchor; k <= hi; ++k) {
      term += q * a(k);
      q *= static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
    }
    q = pmf;
    for (std::uint64_t k = anchor; k > lo; --k) {
      q *= static_cast<double>(k) / (static_cast<double>(n - k + 1) * odds);
      term += q * a(k - 1);
    }
    sum += term;
  }
  return sum;
}

// Occupancy counts of n balls thrown into a fresh GEM(alpha,theta) source,
// by residual allocation: stick i receives Bin(r_i, B_i) of the r_i balls
// still unplaced (one waiting-time binomial per stick, O(n) success draws in
// total). Once at most `residual_cut` balls remain, their partition under
// the renormalized tail -- which is again stick-breaking with parameters
// (alpha, theta + i alpha) -- is realized as a small restaurant process.
// Exact in law, with bounded work even though the deepest occupied urn has a
// heavy-tailed index; the per-ball inverse-CDF route would materialize every
// stick up to that index.
inline OccupancyCounts stick_occupancy_counts(const ModelParams& params, std::uint64_t n,
                                              std::uint64_t source_seed, std::uint64_t ball_seed,
                                              std::uint64_t residual_cut = 4) {
  if (params.variant != Variant::alpha_theta)
    throw std::invalid_argument("stick_occupancy_counts: requires the alpha_theta variant");
  if (n == 0) throw std::invalid_argument("stick_occupancy_counts: n must be >= 1");
  RandomStream sticks(source_seed);
  RandomStream balls(ball_seed);
  OccupancyCounts occ;
  std::uint64_t r = n;
  std::uint64_t i = 0;
  while (r > residual_cut) {
    ++i;
    const double b = sticks.beta(1.0 - params.alpha,
                                 params.theta + static_cast<double>(i) * params.alpha);
    const std::uint64_t k = balls.binomial_waiting(r, b);
    if (k > 0) {
      if (k >= occ.by_size.size()) occ.by_size.resize(k + 1, 0);
      ++occ.by_size[k];
      ++occ.blocks;
      occ.total += k;
      r -= k;
    }
  }
  if (r > 0) {
    const ModelParams tail = make_params(
        params.alpha, params.theta + static_cast<double>(i) * params.alpha);
    CrpProcess closure(tail, balls.next_u64());
    closure.run_to(r);
    for (const auto& [j, c] : closure.counts().sparse()) {
      if (j >= occ.by_size.size()) occ.by_size.resize(j + 1, 0);
      occ.by_size[j] += c;
      occ.blocks += static_cast<std::uint64_t>(c);
      occ.total += j * static_cast<std::uint64_t>(c);
    }
  }
  return occ;
}

struct C0Estimate {
  double c0 = 0.0;
  double se = 0.0;
  double diversity = 0.0;  // Gamma(1-alpha) * c0^alpha
};

// Fits C0 from P^down_j * j^{1/alpha} over the mid-range ranks
// [depth/10, depth/2) of the realized prefix; the standard error comes from
// eight block means (adjacent ranks are strongly correlated).
inline C0Estimate estimate_c0(FrequencySource& src, std::size_t depth) {
  if (depth < 1000) throw std::invalid_argument("estimate_c0: depth must be >= 1000");
  src.extend(depth);
  std::vector<double> p(src.prefix().begin(), src.prefix().begin() + depth);
  std::sort(p.begin(), p.end(), std::greater<double>());
  const std::size_t lo = depth / 10;
  const std::size_t hi = depth / 2;
  const double inv_alpha = 1.0 / src.alpha();
  const std::size_t nblocks = 8;
  std::vector<double> block_mean(nblocks, 0.0);
  std::vector<std::size_t> block_cnt(nblocks, 0);
  for (std::size_t r = lo; r < hi; ++r) {
    const double v = p[r] * std::pow(static_cast<double>(r + 1), inv_alpha);
    const std::size_t b = (r - lo) * nblocks / (hi - lo);
    block_mean[b] += v;
    ++block_cnt[b];
  }
  double mean = 0.0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    block_mean[b] /= static_cast<double>(block_cnt[b]);
    mean += block_mean[b];
  }
  mean /= static_cast<double>(nblocks);
  double var = 0.0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    var += (block_mean[b] - mean) * (block_mean[b] - mean);
  }
  var /= static_cast<double>(nblocks - 1);
  C0Estimate est;
  est.c0 = mean;
  est.se = std::sqrt(var / static_cast<double>(nblocks));
  est.diversity = std::tgamma(1.0 - src.alpha()) * std::pow(mean, src.alpha());
  return est;
}

}  // namespace crpmat
