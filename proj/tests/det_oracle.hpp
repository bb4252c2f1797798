#pragma once

// Test-only oracle: dense complex determinant of I - z M_sigma by Gaussian
// elimination with partial pivoting. Independent of the cycle-count route in
// the library.

#include <complex>
#include <cstdint>
#include <vector>

inline std::complex<double> det_identity_minus_z_perm(const std::vector<std::uint32_t>& sigma,
                                                      std::complex<double> z) {
  const std::size_t n = sigma.size();
  std::vector<std::complex<double>> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
  // M[i][j] = 1{sigma(j) = i}; A = I - z M
  for (std::size_t j = 0; j < n; ++j) a[sigma[j] * n + j] -= z;
  std::complex<double> det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
      det = -det;
    }
    const std::complex<double> d = a[col * n + col];
    det *= d;
    for (std::size_t r = col + 1; r < n; ++r) {
      const std::complex<double> f = a[r * n + col] / d;
      if (f == std::complex<double>(0.0, 0.0)) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
    }
  }
  return det;
}
