#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "crpmat/crp.hpp"
#include "crpmat/feller.hpp"

using namespace crpmat;

TEST_CASE("spacings exhaust [n] for every draw") {
  for (const double theta : {0.5, 1.0, 2.0}) {
    for (int r = 0; r < 400; ++r) {
      const auto draw = feller_coupling(theta, 100, 5, derive_seed(60, r));
      std::uint64_t total = 0;
      for (const auto& [j, c] : draw.c_hat) total += j * static_cast<std::uint64_t>(c);
      REQUIRE(total == 100);
    }
  }
  REQUIRE_THROWS_AS(feller_coupling(0.0, 10, 3, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(feller_coupling(-1.0, 10, 3, 1), std::invalid_argument);
}

TEST_CASE("limit variables are Poisson(theta/j) with small cross-correlation") {
  const double theta = 1.0;
  const std::size_t m = 5;
  const int runs = 20000;
  std::vector<double> s1(m, 0.0), s2(m, 0.0);
  std::vector<std::vector<double>> cross(m, std::vector<double>(m, 0.0));
  for (int r = 0; r < runs; ++r) {
    const auto draw = feller_coupling(theta, 50, m, derive_seed(61, r));
    for (std::size_t j = 0; j < m; ++j) {
      const auto w = static_cast<double>(draw.w[j]);
      s1[j] += w;
      s2[j] += w * w;
      for (std::size_t k = 0; k < m; ++k) cross[j][k] += w * static_cast<double>(draw.w[k]);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double lambda = theta / static_cast<double>(j + 1);
    const double mean = s1[j] / runs;
    const double var = s2[j] / runs - mean * mean;
    const double se_mean = std::sqrt(lambda / runs);
    REQUIRE(std::fabs(mean - lambda) < 4.0 * se_mean);
    // Var of the variance estimator of Poisson: (m4 - var^2)/runs,
    // m4 = lambda(1+3lambda); bound loosely
    const double se_var = std::sqrt((lambda * (1.0 + 3.0 * lambda)) / runs);
    REQUIRE(std::fabs(var - lambda) < 4.0 * se_var);
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j + 1; k < m; ++k) {
      const double mj = s1[j] / runs, mk = s1[k] / runs;
      const double vj = s2[j] / runs - mj * mj, vk = s2[k] / runs - mk * mk;
      const double rho = (cross[j][k] / runs - mj * mk) / std::sqrt(vj * vk);
      REQUIRE(std::fabs(rho) < 4.0 / std::sqrt(static_cast<double>(runs)));
    }
  }
}

TEST_CASE("coupled counts have the exact (0,theta) law at n = 6") {
  const double theta = 1.0;
  const auto exact = enumerate_crp(make_params(0.0, theta), 6);
  std::map<std::vector<std::int64_t>, std::int64_t> freq;
  const int runs = 30000;
  for (int r = 0; r < runs; ++r) {
    const auto draw = feller_coupling(theta, 6, 3, derive_seed(62, r));
    std::vector<std::int64_t> key(6, 0);
    for (const auto& [j, c] : draw.c_hat) key[j - 1] = c;
    ++freq[key];
  }
  double tv = 0.0;
  for (const auto& [state, prob] : exact) {
    const auto it = freq.find(state);
    const double emp = it == freq.end() ? 0.0 : static_cast<double>(it->second) / runs;
    tv += std::fabs(emp - prob);
  }
  for (const auto& [state, cnt] : freq) {
    if (exact.find(state) == exact.end()) tv += static_cast<double>(cnt) / runs;
  }
  REQUIRE(0.5 * tv < 0.02);
}

TEST_CASE("coupling error decreases with n") {
  const double theta = 1.0;
  const int runs = 20000;
  std::vector<double> err;
  for (const std::uint64_t n : {100ull, 1000ull, 10000ull}) {
    double s = 0.0;
    for (int r = 0; r < runs; ++r) {
      const auto draw = feller_coupling(theta, n, 1, derive_seed(63 + static_cast<int>(n), r));
      std::int64_t c1 = 0;
      for (const auto& [j, c] : draw.c_hat) {
        if (j == 1) c1 = c;
      }
      s += std::fabs(static_cast<double>(c1 - draw.w[0]));
    }
    err.push_back(s / runs);
  }
  REQUIRE(err[1] < err[0]);
  REQUIRE(err[2] < err[1]);
}
