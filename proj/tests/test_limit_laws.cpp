#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "crpmat/limit_laws.hpp"

using namespace crpmat;
using Catch::Approx;
using cplx = std::complex<double>;

TEST_CASE("sibuya pmf, tail, and pgf") {
  for (const double a : {0.3, 0.5, 0.7}) {
    REQUIRE(sibuya_pmf(a, 1) == Approx(a).epsilon(1e-12));
    REQUIRE(sibuya_pmf(a, 2) == Approx(a * (1.0 - a) / 2.0).epsilon(1e-12));
    double acc = 0.0;
    double prev_gap = 1.0;
    for (std::uint64_t k = 1; k <= 200; ++k) {
      acc += sibuya_pmf(a, k);
      const double gap = 1.0 - acc;
      REQUIRE(gap > 0.0);
      REQUIRE(gap < prev_gap);
      REQUIRE(gap == Approx(sibuya_tail(a, k)).epsilon(1e-9));
      prev_gap = gap;
    }
  }
  REQUIRE(sibuya_pgf(0.5, cplx(0.75, 0.0)).real() == Approx(0.5).epsilon(1e-13));
  REQUIRE(sibuya_pgf(0.5, cplx(0.75, 0.0)).imag() == Approx(0.0).margin(1e-15));
  // pgf increases to 1 as z -> 1^-
  double prev = 0.0;
  for (const double z : {0.9, 0.99, 0.999, 0.99999}) {
    const double v = sibuya_pgf(0.5, cplx(z, 0.0)).real();
    REQUIRE(v > prev);
    prev = v;
  }
  REQUIRE(prev > 0.99);
  REQUIRE_THROWS_AS(sibuya_pmf(0.5, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(sibuya_pgf(0.5, cplx(1.0, 0.0)), std::invalid_argument);
}

TEST_CASE("cov_zj closed form vs quadrature") {
  REQUIRE(cov_zj_closed(0.5, 1, 1) == Approx(0.72956265828832048).epsilon(1e-12));
  REQUIRE(cov_zj_closed(0.5, 1, 2) == Approx(-0.058749100186664074).epsilon(1e-12));
  for (const double a : {0.3, 0.5, 0.7}) {
    for (std::uint64_t j = 1; j <= 4; ++j) {
      for (std::uint64_t k = j; k <= 4; ++k) {
        const double q = cov_zj(a, j, k, 1.0, 1.0, 1e-10);
        REQUIRE(q == Approx(cov_zj_closed(a, j, k)).margin(1e-9));
      }
    }
  }
}

TEST_CASE("cov_zj symmetry and PSD on the diagonal grid") {
  const double a = 0.5;
  const std::size_t m = 5;
  CovMatrix cov;
  cov.dim = m;
  cov.tol = 1e-9;
  cov.m.assign(m * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j; k < m; ++k) {
      const double v = cov_zj(a, j + 1, k + 1, 1.0, 1.0, 1e-9);
      cov.at(j, k) = v;
      cov.at(k, j) = v;
    }
  }
  REQUIRE(cov.min_eigenvalue() > -1e-8);
}

TEST_CASE("cov_zalpha with unit weights matches the closed form") {
  const Weights one = const_weights();
  for (const double a : {0.3, 0.5, 0.7}) {
    const double v = cov_zalpha(a, one, 1.0, 1.0, 1e-9);
    REQUIRE(v == Approx(cov_const_closed(a, 1.0, 1.0)).margin(1e-8));
    const double c = cov_zalpha(a, one, 0.5, 1.0, 1e-9);
    REQUIRE(c == Approx(cov_const_closed(a, 0.5, 1.0)).margin(1e-8));
  }
  REQUIRE(cov_const_closed(0.5, 1.0, 1.0) == Approx(0.73417442372548448).epsilon(1e-12));
  // variance is increasing in t
  double prev = 0.0;
  for (const double t : {0.2, 0.5, 0.8, 1.0}) {
    const double v = cov_zalpha(0.5, one, t, t, 1e-8);
    REQUIRE(v > prev);
    prev = v;
  }
}

TEST_CASE("cov_zalpha with a single-j indicator equals cov_zj") {
  const Weights ind1([](std::uint64_t j) { return j == 1 ? 1.0 : 0.0; }, 1.0, 0.0, 2, 2, "ind1");
  const double tol = 1e-8;
  REQUIRE(cov_zalpha(0.5, ind1, 1.0, 1.0, tol) ==
          Approx(cov_zj(0.5, 1, 1, 1.0, 1.0, tol)).margin(2 * tol));
  REQUIRE(cov_zalpha(0.5, ind1, 0.4, 1.0, tol) ==
          Approx(cov_zj(0.5, 1, 1, 0.4, 1.0, tol)).margin(2 * tol));
}

TEST_CASE("unbounded weights are rejected") {
  const Weights growing([](std::uint64_t j) { return std::sqrt(static_cast<double>(j)); }, 1.0,
                        0.5, 0, 0, "sqrt");
  REQUIRE_THROWS_AS(cov_zalpha(0.5, growing, 1.0, 1.0, 1e-6), std::invalid_argument);
}

TEST_CASE("eta covariance: series, quadrature, and weighted double sum agree") {
  const double a = 0.5;
  const cplx z(0.3, 0.0);
  const cplx w(0.3, 0.0);
  const cplx series = cov_eta_series(a, z, w, 1e-9);
  const cplx quad = cov_eta_quadrature(a, z, w, 1.0, 1.0, 1e-8);
  REQUIRE(std::abs(series - quad) < 1e-6);

  // double sum over cov_zj (eq. of the weighted representation), J = 40
  cplx dsum(0.0, 0.0);
  for (std::uint64_t j = 1; j <= 40; ++j) {
    const cplx aj = std::log(1.0 - std::pow(z, static_cast<double>(j)));
    for (std::uint64_t k = 1; k <= 40; ++k) {
      const cplx ak = std::log(1.0 - std::pow(w, static_cast<double>(k)));
      if (std::abs(aj) * std::abs(ak) < 1e-14) continue;
      dsum += aj * ak * cov_zj_closed(a, j, k);
    }
  }
  REQUIRE(std::abs(series - dsum) < 1e-6);

  // symmetry in (z, w)
  const cplx zc(0.4, 0.3);
  const cplx wc(-0.5, 0.1);
  REQUIRE(std::abs(cov_eta_series(a, zc, wc, 1e-9) - cov_eta_series(a, wc, zc, 1e-9)) < 1e-9);
  REQUIRE(std::abs(cov_eta_series(a, cplx(0, 0), cplx(0, 0), 1e-9)) == 0.0);
}

TEST_CASE("complex eta covariance decomposes into the Re/Im blocks") {
  const double a = 0.5;
  const cplx z(0.45, 0.2);
  const cplx w(-0.3, 0.4);
  const ReImCov blocks = cov_eta_reim(a, z, w, 1.0, 1.0, 1e-8);
  const cplx direct = cov_eta_quadrature(a, z, w, 1.0, 1.0, 1e-8);
  REQUIRE(direct.real() == Approx(blocks.rr - blocks.ii).margin(1e-6));
  REQUIRE(direct.imag() == Approx(blocks.ri + blocks.ir).margin(1e-6));
}

TEST_CASE("limit process sampler reproduces its covariance") {
  // 1x1: empirical variance matches
  CovMatrix cov1;
  cov1.dim = 1;
  cov1.labels = {1.0};
  cov1.m = {0.64};
  cov1.tol = 1e-10;
  LimitProcessSampler s1(cov1, 17);
  const int n = 100000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = s1.sample()[0];
    acc += v;
    acc2 += v * v;
  }
  const double var = acc2 / n - (acc / n) * (acc / n);
  REQUIRE(std::fabs(var - 0.64) < 3.0 * 0.64 * std::sqrt(2.0 / n));

  // identity 3x3: cross-correlations vanish
  CovMatrix cov3;
  cov3.dim = 3;
  cov3.labels = {1, 2, 3};
  cov3.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  cov3.tol = 1e-10;
  LimitProcessSampler s3(cov3, 18);
  double c01 = 0, c02 = 0, c12 = 0;
  for (int i = 0; i < n; ++i) {
    const auto v = s3.sample();
    c01 += v[0] * v[1];
    c02 += v[0] * v[2];
    c12 += v[1] * v[2];
  }
  REQUIRE(std::fabs(c01 / n) < 0.02);
  REQUIRE(std::fabs(c02 / n) < 0.02);
  REQUIRE(std::fabs(c12 / n) < 0.02);

  // grid covariance from the oracle is reproduced entrywise within 3 SE
  const CovMatrix grid = cov_matrix_zalpha(0.5, const_weights(), {0.25, 0.5, 1.0}, 1e-8);
  LimitProcessSampler sg(grid, 19);
  std::vector<double> mom(9, 0.0);
  const int ng = 200000;
  for (int i = 0; i < ng; ++i) {
    const auto v = sg.sample();
    for (int a1 = 0; a1 < 3; ++a1)
      for (int b1 = 0; b1 < 3; ++b1) mom[a1 * 3 + b1] += v[a1] * v[b1];
  }
  for (int a1 = 0; a1 < 3; ++a1) {
    for (int b1 = 0; b1 < 3; ++b1) {
      const double emp = mom[a1 * 3 + b1] / ng;
      const double exact = grid.at(a1, b1);
      const double se = std::sqrt((grid.at(a1, a1) * grid.at(b1, b1) + exact * exact) /
                                  static_cast<double>(ng));
      REQUIRE(std::fabs(emp - exact) < 3.5 * se);
    }
  }
}

TEST_CASE("indefinite matrices beyond the jitter budget are rejected") {
  CovMatrix bad;
  bad.dim = 2;
  bad.labels = {1, 2};
  bad.m = {1.0, 2.0, 2.0, 1.0};  // eigenvalues 3 and -1
  bad.tol = 1e-8;
  REQUIRE_THROWS_AS(cholesky_jitter(bad), NumericsError);
  REQUIRE(bad.min_eigenvalue() == Approx(-1.0).epsilon(1e-9));
}
