#pragma once

// Exact sequential simulation of (alpha,theta)- and (0,theta)-seating,
// cycle-count bookkeeping, exhaustive small-n law enumeration, and the exact
// block-count mean recursion.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crpmat/params.hpp"
#include "crpmat/rng.hpp"
#include "crpmat/special.hpp"

namespace crpmat {

// Prefix-sum (Fenwick) tree over table masses n_i - alpha, in order of table
// appearance. Table selection is a single uniform draw mapped against the
// cumulative masses, with the new-table mass occupying the final interval;
// a draw landing exactly on a boundary resolves to the lower index.
class FenwickMass {
 public:
  void clear() {
    raw_.clear();
    tree_.assign(1, 0.0);
    cap_ = 0;
  }

  std::size_t size() const { return raw_.size(); }

  void push_back(double mass) {
    if (raw_.size() == cap_) grow();
    raw_.push_back(mass);
    for (std::size_t k = raw_.size(); k <= cap_; k += k & (~k + 1)) tree_[k] += mass;
  }

  void increment(std::size_t i, double delta) {
    raw_[i] += delta;
    for (std::size_t k = i + 1; k <= cap_; k += k & (~k + 1)) tree_[k] += delta;
  }

  // Smallest index i with prefix_sum(0..i) >= target; clamped to size()-1.
  std::size_t lower_bound(double target) const {
    std::size_t pos = 0;
    double rem = target;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= cap_ && tree_[next] < rem) {
        pos = next;
        rem -= tree_[next];
      }
    }
    return pos < raw_.size() ? pos : raw_.size() - 1;
  }

 private:
  void grow() {
    cap_ = cap_ == 0 ? 64 : cap_ * 2;
    top_ = 1;
    while (top_ * 2 <= cap_) top_ *= 2;
    tree_.assign(cap_ + 1, 0.0);
    std::vector<double> masses = std::move(raw_);
    raw_.clear();
    raw_.reserve(cap_);
    for (double m : masses) {
      raw_.push_back(m);
      for (std::size_t k = raw_.size(); k <= cap_; k += k & (~k + 1)) tree_[k] += m;
    }
  }

  std::vector<double> raw_;
  std::vector<double> tree_{0.0};
  std::size_t cap_ = 0;
  std::size_t top_ = 1;
};

// Cycle-count vector C_j indexed by cycle length, plus the block count.
// promote(s) moves one table from size s to size s+1 (s == 0 opens a table).
struct CycleCounts {
  std::vector<std::int64_t> by_size{0};  // index j = cycle length; slot 0 unused
  std::uint64_t blocks = 0;
  std::uint64_t total = 0;

  void promote(std::uint64_t old_size) {
    const std::uint64_t ns = old_size + 1;
    if (ns >= by_size.size()) by_size.resize(ns + 1, 0);
    if (old_size == 0) {
      ++blocks;
    } else {
      --by_size[old_size];
    }
    ++by_size[ns];
    ++total;
  }

  std::int64_t count(std::uint64_t j) const {
    return j < by_size.size() ? by_size[j] : 0;
  }

  std::vector<std::pair<std::uint64_t, std::int64_t>> sparse() const {
    std::vector<std::pair<std::uint64_t, std::int64_t>> out;
    for (std::uint64_t j = 1; j < by_size.size(); ++j) {
      if (by_size[j] != 0) out.emplace_back(j, by_size[j]);
    }
    return out;
  }
};

struct NoHook {
  void on_promote(std::uint64_t) {}
};

// One evolving restaurant. The same instance is advanced customer by
// customer; snapshots along the way realize the intrinsic coupling of the
// partition sequence.
class CrpProcess {
 public:
  CrpProcess(const ModelParams& params, std::uint64_t seed, bool track_permutation = false)
      : params_(params), rng_(seed), track_(track_permutation) {
    masses_.clear();
  }

  std::uint64_t customers() const { return counts_.total; }
  std::uint64_t tables() const { return counts_.blocks; }
  const CycleCounts& counts() const { return counts_; }
  const std::vector<std::uint64_t>& table_sizes() const { return sizes_; }

  void seat_next() { seat_next(NoHook{}); }

  template <class Hook>
  void seat_next(Hook&& hook) {
    const std::uint64_t n = counts_.total;
    if (n == 0) {
      open_table(hook);
      return;
    }
    const double k = static_cast<double>(counts_.blocks);
    const double denom = static_cast<double>(n) + params_.theta;
    const double existing_mass = static_cast<double>(n) - k * params_.alpha;
    const double target = rng_.uniform() * denom;
    if (target >= existing_mass) {
      open_table(hook);
    } else {
      const std::size_t t = masses_.lower_bound(target);
      const std::uint64_t old = sizes_[t];
      masses_.increment(t, 1.0);
      sizes_[t] = old + 1;
      counts_.promote(old);
      hook.on_promote(old);
      if (track_) insert_member(t);
    }
  }

  void run_to(std::uint64_t n) {
    while (counts_.total < n) seat_next();
  }

  template <class Hook>
  void run_to(std::uint64_t n, Hook&& hook) {
    while (counts_.total < n) seat_next(hook);
  }

  // sigma(i) = successor of customer i around its table (0-based labels).
  // Only available when permutation tracking is on.
  std::vector<std::uint32_t> permutation() const {
    if (!track_) throw std::logic_error("CrpProcess: permutation tracking disabled");
    return next_;
  }

 private:
  template <class Hook>
  void open_table(Hook&& hook) {
    masses_.push_back(1.0 - params_.alpha);
    sizes_.push_back(1);
    counts_.promote(0);
    hook.on_promote(0);
    if (track_) {
      const auto c = static_cast<std::uint32_t>(counts_.total - 1);
      members_.push_back({c});
      next_.push_back(c);
      prev_.push_back(c);
    }
  }

  // New customer takes the seat to the left of a uniformly chosen member.
  void insert_member(std::size_t table) {
    auto& mem = members_[table];
    const std::uint32_t x = mem[rng_.uniform_below(mem.size())];
    const auto c = static_cast<std::uint32_t>(counts_.total - 1);
    next_.push_back(0);
    prev_.push_back(0);
    const std::uint32_t y = prev_[x];
    next_[c] = x;
    prev_[c] = y;
    next_[y] = c;
    prev_[x] = c;
    mem.push_back(c);
  }

  ModelParams params_;
  RandomStream rng_;
  bool track_;
  FenwickMass masses_;
  std::vector<std::uint64_t> sizes_;
  CycleCounts counts_;
  std::vector<std::vector<std::uint32_t>> members_;
  std::vector<std::uint32_t> next_, prev_;
};

// Cycle counts and block counts recorded at sizes floor(n*t), all snapshots
// of one evolving process.
struct CycleTrajectory {
  std::uint64_t n = 0;
  std::vector<double> checkpoints;
  std::vector<std::uint64_t> sizes;
  std::vector<std::vector<std::pair<std::uint64_t, std::int64_t>>> counts;
  std::vector<std::uint64_t> blocks;
};

inline void validate_checkpoints(const std::vector<double>& ts) {
  if (ts.empty()) throw std::invalid_argument("checkpoints: empty");
  double prev = 0.0;
  for (double t : ts) {
    if (!(t > 0.0) || t > 1.0) throw std::invalid_argument("checkpoints: need t in (0,1]");
    if (t < prev) throw std::invalid_argument("checkpoints: not sorted");
    prev = t;
  }
  if (ts.back() != 1.0) throw std::invalid_argument("checkpoints: must contain 1");
}

// Runs a process to size n, invoking hook.at_checkpoint(i, m_i, counts) at
// each m_i = floor(n * t_i).
template <class Process, class Hook>
void drive_with_checkpoints(Process& proc, std::uint64_t n, const std::vector<double>& ts,
                            Hook&& hook) {
  validate_checkpoints(ts);
  std::size_t next_ck = 0;
  // checkpoints with floor(n t) == 0 fire immediately on the empty state
  while (next_ck < ts.size()) {
    const auto m = static_cast<std::uint64_t>(static_cast<double>(n) * ts[next_ck]);
    if (m > proc.customers()) break;
    hook.at_checkpoint(next_ck, proc.customers(), proc.counts());
    ++next_ck;
  }
  while (proc.customers() < n) {
    proc.seat_next(hook);
    while (next_ck < ts.size()) {
      const auto m = static_cast<std::uint64_t>(static_cast<double>(n) * ts[next_ck]);
      if (m != proc.customers()) break;
      hook.at_checkpoint(next_ck, proc.customers(), proc.counts());
      ++next_ck;
    }
  }
}

namespace detail {
struct TrajectoryHook {
  CycleTrajectory* out;
  void on_promote(std::uint64_t) {}
  void at_checkpoint(std::size_t, std::uint64_t m, const CycleCounts& c) {
    out->sizes.push_back(m);
    out->counts.push_back(c.sparse());
    out->blocks.push_back(c.blocks);
  }
};
}  // namespace detail

inline CycleTrajectory simulate_crp(const ModelParams& params, std::uint64_t n,
                                    const std::vector<double>& checkpoints, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("simulate_crp: n must be >= 1");
  CycleTrajectory traj;
  traj.n = n;
  traj.checkpoints = checkpoints;
  CrpProcess proc(params, seed);
  detail::TrajectoryHook hook{&traj};
  drive_with_checkpoints(proc, n, checkpoints, hook);
  return traj;
}

// Exact law of the cycle-count vector (C_{n,1},...,C_{n,n}) by dynamic
// programming over cycle-count states. Seat positions inside a table never
// change cycle counts, so states carry only the count vector.
inline std::map<std::vector<std::int64_t>, double> enumerate_crp(const ModelParams& params,
                                                                 std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("enumerate_crp: n must be >= 1");
  if (n > 10) throw std::invalid_argument("enumerate_crp: n > 10 exceeds the resource guard");
  using State = std::vector<std::int64_t>;
  std::map<State, double> cur;
  cur[{1}] = 1.0;  // C_{1,1} = 1
  for (std::uint64_t m = 1; m < n; ++m) {
    std::map<State, double> next;
    const double denom = static_cast<double>(m) + params.theta;
    for (const auto& [state, prob] : cur) {
      std::int64_t k = 0;
      for (auto c : state) k += c;
      // join an existing table of size s (s = index+1)
      for (std::size_t idx = 0; idx < state.size(); ++idx) {
        if (state[idx] == 0) continue;
        const double s = static_cast<double>(idx + 1);
        const double p = prob * static_cast<double>(state[idx]) * (s - params.alpha) / denom;
        State ns = state;
        --ns[idx];
        if (idx + 2 > ns.size()) ns.resize(idx + 2, 0);
        ++ns[idx + 1];
        next[ns] += p;
      }
      // open a new table
      const double pnew = prob * (params.theta + params.alpha * static_cast<double>(k)) / denom;
      State ns = state;
      ++ns[0];
      next[ns] += pnew;
    }
    cur = std::move(next);
  }
  // normalize key length to n
  std::map<State, double> out;
  for (auto& [state, prob] : cur) {
    State key = state;
    key.resize(n, 0);
    out[key] += prob;
  }
  return out;
}

// E|Pi_n| from the one-step recursion
// E|Pi_{m+1}| = E|Pi_m| + (theta + alpha E|Pi_m|) / (m + theta).
inline double block_count_mean(const ModelParams& params, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("block_count_mean: n must be >= 1");
  double e = 1.0;
  for (std::uint64_t m = 1; m < n; ++m) {
    e += (params.theta + params.alpha * e) / (static_cast<double>(m) + params.theta);
  }
  return e;
}

// Exact E C_{n,j} for the (0,theta) model:
// (theta/j) * n!/(n-j)! * Gamma(theta+n-j)/Gamma(theta+n).
inline double ewens_cycle_mean(double theta, std::uint64_t n, std::uint64_t j) {
  if (j == 0 || j > n) throw std::invalid_argument("ewens_cycle_mean: need 1 <= j <= n");
  const double ln = log_factorial(n) - log_factorial(n - j) +
                    lgamma_ts(theta + static_cast<double>(n - j)) -
                    lgamma_ts(theta + static_cast<double>(n));
  return theta / static_cast<double>(j) * std::exp(ln);
}

}  // namespace crpmat
