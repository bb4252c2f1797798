#pragma once

// Weight sequences a_j for weighted cycle-count sums, with a_0 = 0 and a
// growth certificate (|a_j| <= C j^beta and |a_{i+j} - a_i| <= C j^beta).

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crpmat {

template <class T>
class BasicWeights {
 public:
  BasicWeights(std::function<T(std::uint64_t)> eval, double bound, double beta,
               std::uint64_t support_end, std::uint64_t const_from, std::string description)
      : eval_(std::move(eval)),
        bound_(bound),
        beta_(beta),
        support_end_(support_end),
        const_from_(const_from),
        desc_(std::move(description)) {}

  T operator()(std::uint64_t j) const {
    if (j == 0) return T{};
    if (support_end_ > 0 && j >= support_end_) return T{};
    return eval_(j);
  }

  double bound() const { return bound_; }
  double beta() const { return beta_; }
  bool bounded() const { return beta_ == 0.0; }
  // a_j == 0 for all j >= support_end(); 0 means no finite support is known.
  std::uint64_t support_end() const { return support_end_; }
  // a_j is constant for all j >= const_from(); 0 means not eventually constant.
  std::uint64_t const_from() const { return const_from_; }
  const std::string& description() const { return desc_; }

  std::vector<T> value_table(std::uint64_t max_j) const {
    std::vector<T> t(max_j + 1);
    for (std::uint64_t j = 0; j <= max_j; ++j) t[j] = (*this)(j);
    return t;
  }

  // delta[c] = a_{c+1} - a_c for incremental statistics.
  std::vector<T> delta_table(std::uint64_t len) const {
    std::vector<T> d(len);
    T prev{};
    for (std::uint64_t c = 0; c < len; ++c) {
      const T next = (*this)(c + 1);
      d[c] = next - prev;
      prev = next;
    }
    return d;
  }

 private:
  std::function<T(std::uint64_t)> eval_;
  double bound_;
  double beta_;
  std::uint64_t support_end_;
  std::uint64_t const_from_;
  std::string desc_;
};

using Weights = BasicWeights<double>;
using ComplexWeights = BasicWeights<std::complex<double>>;

// a_j = 1 for j >= 1 (so the weighted sum is the block count).
inline Weights const_weights() {
  return Weights([](std::uint64_t) { return 1.0; }, 1.0, 0.0, 0, 1, "const");
}

namespace detail {
// #{k in [0,j) : k/j < c}, evaluated in extended precision.
inline std::uint64_t arc_grid_count(std::uint64_t j, double c) {
  const long double t = static_cast<long double>(j) * static_cast<long double>(c);
  long double cl = std::ceil(t);
  if (cl < 0.0L) cl = 0.0L;
  auto cnt = static_cast<std::uint64_t>(cl);
  return cnt > j ? j : cnt;
}
}  // namespace detail

// Indicator-arc weights a_j = #{k/j in [c1,c2)} - j(c2-c1), the exact Riemann
// sum of the counting statistic. |a_j| <= 1, |a_{i+j} - a_i| <= 2.
inline Weights arc_weights(double c1, double c2) {
  if (!(c1 >= 0.0) || !(c1 < c2) || !(c2 <= 1.0))
    throw std::invalid_argument("arc_weights: need 0 <= c1 < c2 <= 1");
  const double len = c2 - c1;
  auto eval = [c1, c2, len](std::uint64_t j) {
    const auto cnt =
        static_cast<double>(detail::arc_grid_count(j, c2) - detail::arc_grid_count(j, c1));
    return cnt - static_cast<double>(j) * len;
  };
  return Weights(eval, 2.0, 0.0, 0, 0,
                 "arc:" + std::to_string(c1) + ":" + std::to_string(c2));
}

// a_j(f) = sum_{k<j} f(k/j) - j * integral. The integral of f over [0,1)
// must be supplied with certified accuracy.
inline Weights function_weights(std::function<double(double)> f, double integral, double bound,
                                std::string name = "function") {
  auto eval = [f = std::move(f), integral](std::uint64_t j) {
    double s = 0.0;
    for (std::uint64_t k = 0; k < j; ++k) {
      const double v = f(static_cast<double>(k) / static_cast<double>(j));
      if (!std::isfinite(v)) throw std::invalid_argument("function_weights: non-finite value");
      s += v;
    }
    return s - static_cast<double>(j) * integral;
  };
  return Weights(eval, bound, 0.0, 0, 0, std::move(name));
}

// a_j = log(1 - z^j), principal branch, |z| < 1. Underflows to exactly zero
// once |z|^j is subnormal, which yields the finite support certificate.
inline ComplexWeights log_charpoly_weights(std::complex<double> z) {
  const double az = std::abs(z);
  if (!(az < 1.0)) throw std::invalid_argument("log_charpoly_weights: requires |z| < 1");
  std::uint64_t support = 0;
  if (az > 0.0) {
    support = static_cast<std::uint64_t>(std::ceil(-745.0 / std::log(az))) + 2;
  } else {
    support = 1;  // z = 0: all weights vanish
  }
  const double bound = -std::log1p(-az) + 1.6;  // |log(1-w)| <= -log(1-|w|) + pi/2 margin
  auto eval = [z](std::uint64_t j) {
    return std::log(1.0 - std::pow(z, static_cast<double>(j)));
  };
  return ComplexWeights(eval, bound, 0.0, support, support,
                        "logz:" + std::to_string(z.real()) + ":" + std::to_string(z.imag()));
}

// Fixed table a_1..a_len; zero beyond.
template <class T>
BasicWeights<T> table_weights(std::vector<T> values, std::string name = "table") {
  double bound = 0.0;
  for (const T& v : values) bound = std::max(bound, std::abs(v));
  const std::uint64_t support = values.size() + 1;
  auto eval = [vals = std::move(values)](std::uint64_t j) {
    return (j >= 1 && j <= vals.size()) ? vals[j - 1] : T{};
  };
  return BasicWeights<T>(eval, bound, 0.0, support, support, std::move(name));
}

inline Weights real_part(const ComplexWeights& w, std::string name = "re") {
  return Weights([w](std::uint64_t j) { return w(j).real(); }, w.bound(), w.beta(),
                 w.support_end(), w.const_from(), std::move(name));
}

inline Weights imag_part(const ComplexWeights& w, std::string name = "im") {
  return Weights([w](std::uint64_t j) { return w(j).imag(); }, w.bound(), w.beta(),
                 w.support_end(), w.const_from(), std::move(name));
}

// S = sum_j a_j C_{n,j} over the nonzero counts.
template <class T>
T weighted_sum(const std::vector<std::pair<std::uint64_t, std::int64_t>>& counts,
               const BasicWeights<T>& w) {
  T s{};
  for (const auto& [j, c] : counts) s += static_cast<double>(c) * w(j);
  return s;
}

// Incremental tracker of S under promote events; `delta` must come from
// the same weights (materialized once, shared read-only across replicas).
template <class T>
struct WeightedStat {
  const std::vector<T>* delta = nullptr;
  const BasicWeights<T>* weights = nullptr;
  T value{};

  void on_promote(std::uint64_t old_count) {
    if (old_count < delta->size()) {
      value += (*delta)[old_count];
      return;
    }
    const std::uint64_t cf = weights->const_from();
    if (cf > 0 && old_count >= cf) return;  // a_{c+1} == a_c there
    value += (*weights)(old_count + 1) - (*weights)(old_count);
  }
};

}  // namespace crpmat
