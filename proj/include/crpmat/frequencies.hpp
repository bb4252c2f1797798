#pragma once

// Frequency sources for the infinite urn model: lazily extended GEM(alpha,
// theta) stick-breaking and the deterministic power law p_j = j^{-1/alpha} /
// zeta(1/alpha). Sampling is exact inverse-CDF against the cumulative prefix,
// extending the prefix whenever a draw lands in the tail mass. A frozen
// source additionally exposes an alias-table sampler for high-throughput use.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "crpmat/params.hpp"
#include "crpmat/rng.hpp"
#include "crpmat/special.hpp"

namespace crpmat {

enum class SourceKind { stick_breaking, power_law };

class FrequencySource {
 public:
  static FrequencySource stick_breaking(const ModelParams& params, std::uint64_t seed) {
    if (params.variant != Variant::alpha_theta)
      throw std::invalid_argument("stick_breaking: requires the alpha_theta variant");
    FrequencySource s;
    s.kind_ = SourceKind::stick_breaking;
    s.alpha_ = params.alpha;
    s.theta_ = params.theta;
    s.rng_ = std::make_unique<RandomStream>(seed);
    s.stick_prod_ = 1.0;
    return s;
  }

  static FrequencySource power_law(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
      throw std::invalid_argument("power_law: requires alpha in (0,1)");
    FrequencySource s;
    s.kind_ = SourceKind::power_law;
    s.alpha_ = alpha;
    s.s_exp_ = 1.0 / alpha;
    s.zeta_ = riemann_zeta(s.s_exp_);
    return s;
  }

  FrequencySource(FrequencySource&&) = default;
  FrequencySource& operator=(FrequencySource&&) = default;

  SourceKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double theta() const { return theta_; }
  std::size_t generated() const { return p_.size(); }
  bool is_frozen() const { return frozen_; }

  // Regular-variation constant C0 with P^down_j ~ C0 j^{-1/alpha}; exact for
  // the power law, unavailable here for stick-breaking (see estimate_c0).
  double c0() const {
    if (kind_ != SourceKind::power_law)
      throw std::logic_error("c0: only known in closed form for power_law sources");
    return 1.0 / zeta_;
  }

  double frequency(std::size_t i) {
    if (kind_ == SourceKind::power_law && i >= p_.size()) {
      // analytic, no need to materialize
      return std::pow(static_cast<double>(i + 1), -s_exp_) / zeta_;
    }
    while (i >= p_.size()) extend_one();
    return p_[i];
  }

  double cumulative(std::size_t i) {
    while (i >= cum_.size()) extend_one();
    return cum_[i];
  }

  // Probability mass beyond the generated prefix.
  double tail_mass() const {
    if (kind_ == SourceKind::stick_breaking) return stick_prod_;
    return zeta_tail_from(s_exp_, p_.size() + 1) / zeta_;
  }

  // Mass of the urns with 0-based id >= l. Extends a stick-breaking prefix
  // as needed (so it throws on a frozen stick source if l > generated()).
  double tail_after(std::size_t l) {
    if (l == 0) return 1.0;
    if (kind_ == SourceKind::power_law) return zeta_tail_from(s_exp_, l + 1) / zeta_;
    while (tails_.size() < l) extend_one();
    return tails_[l - 1];
  }

  // Upper bound on every frequency with id >= l.
  double max_frequency_from(std::size_t l) {
    if (kind_ == SourceKind::power_law)
      return std::pow(static_cast<double>(l + 1), -s_exp_) / zeta_;
    return tail_after(l);
  }

  void extend(std::size_t count) {
    while (p_.size() < count) extend_one();
  }

  // Materializes the prefix until tail_mass() < threshold and marks the
  // source read-only. Power-law tails stay exactly sampleable afterwards
  // (analytic inversion); for stick-breaking sources, later draws landing in
  // the frozen tail are treated as distinct singleton urns, an approximation
  // with total-variation error below #balls^2 * threshold^2.
  void freeze(double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
      throw std::invalid_argument("freeze: threshold must lie in (0,1)");
    const std::size_t hard_cap = 1u << 27;
    if (p_.empty()) extend_one();
    while (tail_mass() >= threshold) {
      if (p_.size() >= hard_cap)
        throw NumericsError("freeze: tail threshold unreachable within the memory guard");
      extend_one();
    }
    frozen_ = true;
  }

  // Exact inverse-CDF lookup of one urn label for u in [0,1). Extends the
  // prefix lazily; on a frozen source tail draws use the analytic tail
  // (power law) or return kVirtualUrn (stick-breaking).
  static constexpr std::uint64_t kVirtualUrn = ~std::uint64_t{0};

  std::uint64_t sample_index(double u) {
    if (!cum_.empty() && u < cum_.back()) {
      return static_cast<std::uint64_t>(
          std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    }
    if (kind_ == SourceKind::power_law) {
      // a modest cached prefix is enough; beyond it the tail inverts
      // analytically, which is exact and needs no materialization
      while (!frozen_ && p_.size() < 4096 && (cum_.empty() || u >= cum_.back())) extend_one();
      if (u < cum_.back()) {
        return static_cast<std::uint64_t>(std::upper_bound(cum_.begin(), cum_.end(), u) -
                                          cum_.begin());
      }
      return invert_tail((u - cum_.back()) / tail_mass());
    }
    if (frozen_) return kVirtualUrn;
    // for a stick source the index of a draw near u = 1 is heavy-tailed;
    // the guard keeps a single unlucky draw from exhausting memory
    // (stick_occupancy_counts avoids the issue for plain occupancy counts)
    const std::size_t extension_guard = std::size_t{1} << 23;
    while (cum_.empty() || u >= cum_.back()) {
      if (p_.size() >= extension_guard)
        throw NumericsError("sample_index: lazy extension exceeded the memory guard");
      extend_one();
    }
    return static_cast<std::uint64_t>(std::upper_bound(cum_.begin(), cum_.end(), u) -
                                      cum_.begin());
  }

  // Conditional inverse CDF over the tail urns {prefix, prefix+1, ...}
  // (0-based ids), power law only; v in [0,1).
  std::uint64_t invert_tail(double v) const {
    if (kind_ != SourceKind::power_law) throw std::logic_error("invert_tail: power_law only");
    if (v < 0.0) v = 0.0;
    if (v >= 1.0) v = std::nextafter(1.0, 0.0);
    const std::uint64_t first = p_.size() + 1;  // 1-based label of first tail urn
    const double tail_total = zeta_tail_from(s_exp_, first);
    const double target = tail_total * (1.0 - v);  // find smallest m with T(m+1) <= target
    std::uint64_t lo = first;                      // T(lo+1) > target may fail; test first urn
    if (zeta_tail_from(s_exp_, lo + 1) <= target) return lo - 1;
    std::uint64_t hi = lo;
    std::uint64_t span = 1;
    const std::uint64_t cap = std::uint64_t{1} << 62;
    while (zeta_tail_from(s_exp_, hi + 1) > target) {
      if (hi >= cap) break;
      lo = hi;
      hi = hi + span < cap ? hi + span : cap;
      span *= 2;
    }
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (zeta_tail_from(s_exp_, mid + 1) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return hi - 1;  // back to 0-based id
  }

  const std::vector<double>& prefix() const { return p_; }

 private:
  FrequencySource() = default;

  void extend_one() {
    if (frozen_) throw std::logic_error("FrequencySource: frozen sources are read-only");
    double p;
    if (kind_ == SourceKind::stick_breaking) {
      const auto i = static_cast<double>(p_.size() + 1);
      const double b = rng_->beta(1.0 - alpha_, theta_ + i * alpha_);
      p = stick_prod_ * b;
      stick_prod_ *= (1.0 - b);
      tails_.push_back(stick_prod_);
    } else {
      const auto j = static_cast<double>(p_.size() + 1);
      p = std::pow(j, -s_exp_) / zeta_;
    }
    p_.push_back(p);
    cum_.push_back((cum_.empty() ? 0.0 : cum_.back()) + p);
  }

  SourceKind kind_ = SourceKind::power_law;
  double alpha_ = 0.5;
  double theta_ = 0.0;
  double s_exp_ = 2.0;
  double zeta_ = 0.0;
  double stick_prod_ = 1.0;
  bool frozen_ = false;
  std::unique_ptr<RandomStream> rng_;
  std::vector<double> p_;
  std::vector<double> cum_;
  std::vector<double> tails_;  // stick-breaking: exact tail after each stick
};

// Immutable O(1)-per-draw sampler over a frozen source: Vose alias table over
// the prefix plus one tail bucket. Shareable across threads.
class FrozenSampler {
 public:
  explicit FrozenSampler(const FrequencySource& src) : src_(&src) {
    if (!src.is_frozen()) throw std::logic_error("FrozenSampler: source must be frozen first");
    const auto& p = src.prefix();
    m_ = p.size();
    tail_ = src.tail_mass();
    const std::size_t n = m_ + 1;
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < m_; ++i) scaled[i] = p[i] * static_cast<double>(n);
    scaled[m_] = tail_ * static_cast<double>(n);
    std::vector<std::uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t i : large) prob_[i] = 1.0;
    for (std::uint32_t i : small) prob_[i] = 1.0;
  }

  std::size_t prefix_len() const { return m_; }
  double tail_mass() const { return tail_; }

  // Returns a 0-based urn id; FrequencySource::kVirtualUrn marks a frozen
  // stick-breaking tail hit (callers treat it as a fresh singleton urn).
  std::uint64_t sample(RandomStream& rng) const {
    const std::uint64_t i = rng.uniform_below(m_ + 1);
    const double v = rng.uniform();
    const std::uint64_t id = v < prob_[i] ? i : alias_[i];
    if (id == m_) {
      if (src_->kind() == SourceKind::power_law) return src_->invert_tail(rng.uniform());
      return FrequencySource::kVirtualUrn;
    }
    return id;
  }

 private:
  const FrequencySource* src_;
  std::size_t m_ = 0;
  double tail_ = 0.0;
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace crpmat
