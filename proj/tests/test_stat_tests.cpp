#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crpmat/rng.hpp"
#include "crpmat/stat_tests.hpp"

using namespace crpmat;

TEST_CASE("ks two-sample basics") {
  RandomStream rng(3);
  std::vector<double> a(10000), b(10000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal() + 1.0;

  const auto same = ks_two_sample(a, a);
  REQUIRE(same.statistic == 0.0);
  REQUIRE(same.p_value == 1.0);

  const auto shifted = ks_two_sample(a, b);
  REQUIRE(shifted.p_value < 1e-6);

  std::vector<double> c(10000);
  for (auto& v : c) v = rng.normal();
  const auto null = ks_two_sample(a, c);
  REQUIRE(null.p_value > 0.001);

  REQUIRE_THROWS_AS(ks_two_sample(std::vector<double>(50, 0.0), a), std::invalid_argument);
  REQUIRE_THROWS_AS(ks_two_sample(std::vector<double>(500, 1.0), a), std::invalid_argument);
}

TEST_CASE("ks one-sample against a normal reference") {
  RandomStream rng(5);
  std::vector<double> a(20000);
  for (auto& v : a) v = 2.0 + 3.0 * rng.normal();
  REQUIRE(ks_vs_normal(a, 2.0, 9.0).p_value > 0.001);
  REQUIRE(ks_vs_normal(a, 0.0, 9.0).p_value < 1e-6);
  REQUIRE_THROWS_AS(ks_vs_normal(a, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("ks p-values are roughly uniform under the null") {
  RandomStream rng(9);
  int small = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(400), b(400);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    if (ks_two_sample(a, b).p_value < 0.1) ++small;
  }
  // expect ~20 +- a few (the asymptotic p is slightly conservative)
  REQUIRE(small < 45);
}

TEST_CASE("chi2 two-sample") {
  std::vector<std::pair<std::int64_t, std::int64_t>> equal;
  for (int i = 0; i < 8; ++i) equal.emplace_back(50, 50);
  const auto same = chi2_two_sample(equal);
  REQUIRE(same.ok);
  REQUIRE(same.statistic == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(same.p_value == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(same.dof == 7);

  std::vector<std::pair<std::int64_t, std::int64_t>> off;
  off.emplace_back(100, 200);
  off.emplace_back(200, 100);
  off.emplace_back(100, 100);
  const auto diff = chi2_two_sample(off);
  REQUIRE(diff.ok);
  REQUIRE(diff.p_value < 1e-6);

  // null behaviour with multinomial-ish counts
  RandomStream rng(11);
  std::vector<std::pair<std::int64_t, std::int64_t>> null_bins(10, {0, 0});
  for (int i = 0; i < 5000; ++i) {
    ++null_bins[rng.uniform_below(10)].first;
    ++null_bins[rng.uniform_below(10)].second;
  }
  const auto null_res = chi2_two_sample(null_bins);
  REQUIRE(null_res.ok);
  REQUIRE(null_res.p_value > 0.001);

  // tiny bins get merged; impossible cases abort with a note
  std::vector<std::pair<std::int64_t, std::int64_t>> sparse{
      {200, 210}, {150, 140}, {1, 0}, {0, 1}, {2, 1}};
  const auto merged = chi2_two_sample(sparse);
  REQUIRE(merged.ok);
  REQUIRE(merged.bins_used == 2);

  std::vector<std::pair<std::int64_t, std::int64_t>> hopeless{{100, 100}, {1, 2}};
  const auto bad = chi2_two_sample(hopeless);
  REQUIRE_FALSE(bad.ok);
  REQUIRE_FALSE(bad.note.empty());
}
