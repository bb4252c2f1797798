#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "crpmat/crp.hpp"
#include "crpmat/stat_tests.hpp"

using namespace crpmat;

TEST_CASE("parameter validation") {
  const ModelParams p = make_params(0.5, 0.5);
  REQUIRE(p.variant == Variant::alpha_theta);
  REQUIRE_THROWS_AS(make_params(0.5, -0.6), std::invalid_argument);
  REQUIRE_THROWS_AS(make_params(0.5, -0.5), std::invalid_argument);
  const ModelParams e = make_params(0.0, 1.0);
  REQUIRE(e.variant == Variant::zero_theta);
  REQUIRE_THROWS_AS(make_params(0.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_params(0.0, -1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_params(1.0, 2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_params(-0.1, 2.0), std::invalid_argument);
  REQUIRE(make_params(0.8, -0.2).variant == Variant::alpha_theta);
}

TEST_CASE("enumerate_crp exact small laws") {
  const auto law1 = enumerate_crp(make_params(0.5, 0.5), 1);
  REQUIRE(law1.size() == 1);
  REQUIRE(law1.at({1}) == Catch::Approx(1.0));

  const auto law2 = enumerate_crp(make_params(0.5, 0.5), 2);
  REQUIRE(law2.at({2, 0}) == Catch::Approx(2.0 / 3.0).epsilon(1e-14));
  REQUIRE(law2.at({0, 1}) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));

  const auto ewens2 = enumerate_crp(make_params(0.0, 1.0), 2);
  REQUIRE(ewens2.at({2, 0}) == Catch::Approx(0.5).epsilon(1e-14));
  REQUIRE(ewens2.at({0, 1}) == Catch::Approx(0.5).epsilon(1e-14));

  for (auto params : {make_params(0.5, 0.5), make_params(0.8, -0.2), make_params(0.0, 2.0)}) {
    const auto law = enumerate_crp(params, 8);
    double total = 0.0;
    for (const auto& [state, prob] : law) {
      total += prob;
      std::int64_t weighted = 0;
      for (std::size_t j = 0; j < state.size(); ++j)
        weighted += static_cast<std::int64_t>(j + 1) * state[j];
      REQUIRE(weighted == 8);
    }
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  }
  REQUIRE_THROWS_AS(enumerate_crp(make_params(0.5, 0.5), 11), std::invalid_argument);
}

TEST_CASE("simulate_crp determinism and invariants") {
  const ModelParams p = make_params(0.5, 0.5);
  const std::vector<double> cks{0.25, 0.5, 1.0};
  const auto t1 = simulate_crp(p, 10000, cks, 42);
  const auto t2 = simulate_crp(p, 10000, cks, 42);
  REQUIRE(t1.sizes == t2.sizes);
  REQUIRE(t1.blocks == t2.blocks);
  REQUIRE(t1.counts == t2.counts);

  for (std::size_t i = 0; i < t1.sizes.size(); ++i) {
    std::uint64_t weighted = 0;
    std::int64_t blocks = 0;
    for (const auto& [j, c] : t1.counts[i]) {
      weighted += j * static_cast<std::uint64_t>(c);
      blocks += c;
    }
    REQUIRE(weighted == t1.sizes[i]);
    REQUIRE(static_cast<std::uint64_t>(blocks) == t1.blocks[i]);
    if (i > 0) REQUIRE(t1.blocks[i] >= t1.blocks[i - 1]);
  }

  const auto seeded_differently = simulate_crp(p, 10000, cks, 43);
  REQUIRE(seeded_differently.counts != t1.counts);

  // n=1: a single customer forms a single 1-cycle
  const auto tiny = simulate_crp(p, 1, {1.0}, 0);
  REQUIRE(tiny.blocks.back() == 1);
  REQUIRE(tiny.counts.back() == std::vector<std::pair<std::uint64_t, std::int64_t>>{{1, 1}});
}

TEST_CASE("empirical law matches the exact enumeration at n = 6") {
  for (auto params : {make_params(0.5, 0.5), make_params(0.0, 1.0)}) {
    const auto exact = enumerate_crp(params, 6);
    std::map<std::vector<std::int64_t>, std::int64_t> freq;
    const int runs = 20000;
    for (int r = 0; r < runs; ++r) {
      CrpProcess proc(params, derive_seed(2024, static_cast<std::uint64_t>(r)));
      proc.run_to(6);
      std::vector<std::int64_t> key(6, 0);
      for (const auto& [j, c] : proc.counts().sparse()) key[j - 1] = c;
      ++freq[key];
    }
    double tv = 0.0;
    for (const auto& [state, prob] : exact) {
      const auto it = freq.find(state);
      const double emp = it == freq.end() ? 0.0 : static_cast<double>(it->second) / runs;
      tv += std::fabs(emp - prob);
    }
    for (const auto& [state, count] : freq) {
      if (exact.find(state) == exact.end()) tv += static_cast<double>(count) / runs;
    }
    tv *= 0.5;
    REQUIRE(tv < 0.03);
  }
}

TEST_CASE("block_count_mean recursion") {
  const ModelParams p50 = make_params(0.5, 0.0);
  REQUIRE(block_count_mean(p50, 1) == Catch::Approx(1.0));
  REQUIRE(block_count_mean(p50, 2) == Catch::Approx(1.5).epsilon(1e-14));
  // one recursion step: 1 + (0.5 + 0.5*1)/1.5 = 5/3 (matches the exact
  // enumeration; see also the seat_next rule P(new) = 2/3 at n=1)
  REQUIRE(block_count_mean(make_params(0.5, 0.5), 2) == Catch::Approx(5.0 / 3.0).epsilon(1e-14));

  // against enumeration at n = 7
  for (auto params : {make_params(0.5, 0.5), make_params(0.3, 0.0), make_params(0.0, 1.5)}) {
    const auto law = enumerate_crp(params, 7);
    double mean = 0.0;
    for (const auto& [state, prob] : law) {
      std::int64_t blocks = 0;
      for (auto c : state) blocks += c;
      mean += prob * static_cast<double>(blocks);
    }
    REQUIRE(block_count_mean(params, 7) == Catch::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("monte carlo block count agrees with the recursion") {
  const ModelParams p = make_params(0.5, 0.5);
  const std::uint64_t n = 300;
  const int runs = 4000;
  double s1 = 0.0, s2 = 0.0;
  for (int r = 0; r < runs; ++r) {
    CrpProcess proc(p, derive_seed(7, static_cast<std::uint64_t>(r)));
    proc.run_to(n);
    const auto b = static_cast<double>(proc.tables());
    s1 += b;
    s2 += b * b;
  }
  const double mean = s1 / runs;
  const double sd = std::sqrt((s2 / runs - mean * mean) / (runs - 1));
  REQUIRE(std::fabs(mean - block_count_mean(p, n)) < 4.0 * sd);
}

TEST_CASE("ewens_cycle_mean matches enumeration") {
  const double theta = 1.5;
  const auto law = enumerate_crp(make_params(0.0, theta), 6);
  for (std::uint64_t j = 1; j <= 6; ++j) {
    double mean = 0.0;
    for (const auto& [state, prob] : law) mean += prob * static_cast<double>(state[j - 1]);
    REQUIRE(ewens_cycle_mean(theta, 6, j) == Catch::Approx(mean).margin(1e-12));
  }
}

TEST_CASE("tracked permutations have cycle type equal to the table sizes") {
  const ModelParams p = make_params(0.5, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CrpProcess proc(p, seed, /*track_permutation=*/true);
    proc.run_to(40);
    const auto sigma = proc.permutation();
    REQUIRE(sigma.size() == 40);
    // decompose sigma into cycles
    std::vector<bool> seen(sigma.size(), false);
    std::map<std::uint64_t, std::int64_t> cycle_counts;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      if (seen[i]) continue;
      std::uint64_t len = 0;
      std::size_t cur = i;
      while (!seen[cur]) {
        seen[cur] = true;
        cur = sigma[cur];
        ++len;
      }
      ++cycle_counts[len];
    }
    for (const auto& [j, c] : proc.counts().sparse()) {
      REQUIRE(cycle_counts[j] == c);
    }
  }
}

TEST_CASE("normalized block counts stabilize between n and 2n") {
  // |Pi_n|/n^alpha approaches the alpha-diversity law; the laws at n and 2n
  // are already indistinguishable at this resolution
  const ModelParams p = make_params(0.5, 0.5);
  auto draw = [&](std::uint64_t n, std::uint64_t stream) {
    std::vector<double> out(1500);
    for (std::size_t r = 0; r < out.size(); ++r) {
      CrpProcess proc(p, derive_seed(stream, r));
      proc.run_to(n);
      out[r] = static_cast<double>(proc.tables()) / std::pow(static_cast<double>(n), 0.5);
    }
    return out;
  };
  const auto a = draw(2000, 1111);
  const auto b = draw(4000, 2222);
  const auto ks = ks_two_sample(a, b);
  REQUIRE(ks.p_value > 0.001);
}
