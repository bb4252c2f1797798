#pragma once

// Adaptive Gauss-Kronrod (G7,K15) quadrature on a finite interval.
// Panels are split worst-error-first until the summed local error estimates
// drop below the requested absolute tolerance.

#include <cmath>
#include <complex>
#include <cstdint>
#include <queue>
#include <vector>

#include "crpmat/special.hpp"

namespace crpmat {

namespace detail {
// QUADPACK dqk15 nodes and weights (positive half; node 7 is the midpoint).
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
inline constexpr double kWg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694};

template <class T>
double abs_of(const T& v) {
  if constexpr (std::is_same_v<T, std::complex<double>>) {
    return std::abs(v);
  } else {
    return std::fabs(v);
  }
}
}  // namespace detail

template <class T>
struct QuadratureResult {
  T value{};
  double error = 0.0;
  bool converged = false;
  std::int64_t evaluations = 0;
};

// One K15 panel on [a,b]; returns (kronrod value, |kronrod - gauss|).
template <class T, class F>
std::pair<T, double> gk15_panel(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T resg{};
  T resk{};
  const T fc = f(c);
  resk += detail::kWgk[7] * fc;
  resg += detail::kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = h * detail::kXgk[i];
    const T f1 = f(c - x);
    const T f2 = f(c + x);
    resk += detail::kWgk[i] * (f1 + f2);
    if (i % 2 == 1) resg += detail::kWg[i / 2] * (f1 + f2);
  }
  resk *= h;
  resg *= h;
  const double err = detail::abs_of<T>(resk - resg);
  return {resk, err};
}

template <class T, class F>
QuadratureResult<T> adaptive_integrate(F&& f, double a, double b, double abs_tol,
                                       int max_panels = 4000) {
  struct Panel {
    double a, b, err;
    T val;
    bool operator<(const Panel& o) const { return err < o.err; }
  };
  QuadratureResult<T> out;
  std::priority_queue<Panel> heap;
  auto push = [&](double lo, double hi) {
    auto [v, e] = gk15_panel<T>(f, lo, hi);
    out.evaluations += 15;
    heap.push(Panel{lo, hi, e, v});
  };
  // A few initial panels so that structure away from the midpoint is seen.
  const int n0 = 8;
  for (int i = 0; i < n0; ++i) {
    push(a + (b - a) * i / n0, a + (b - a) * (i + 1) / n0);
  }
  double total_err = 0.0;
  {
    std::priority_queue<Panel> tmp = heap;
    while (!tmp.empty()) {
      total_err += tmp.top().err;
      tmp.pop();
    }
  }
  int panels = n0;
  while (total_err > abs_tol && panels < max_panels) {
    Panel worst = heap.top();
    heap.pop();
    total_err -= worst.err;
    const double mid = 0.5 * (worst.a + worst.b);
    auto [v1, e1] = gk15_panel<T>(f, worst.a, mid);
    auto [v2, e2] = gk15_panel<T>(f, mid, worst.b);
    out.evaluations += 30;
    heap.push(Panel{worst.a, mid, e1, v1});
    heap.push(Panel{mid, worst.b, e2, v2});
    total_err += e1 + e2;
    ++panels;
  }
  T sum{};
  while (!heap.empty()) {
    sum += heap.top().val;
    heap.pop();
  }
  out.value = sum;
  out.error = total_err;
  out.converged = total_err <= abs_tol;
  return out;
}

}  // namespace crpmat
