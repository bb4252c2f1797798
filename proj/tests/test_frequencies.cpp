#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "crpmat/frequencies.hpp"

using namespace crpmat;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("power law frequencies and constants") {
  auto src = FrequencySource::power_law(0.5);
  REQUIRE(src.c0() == Catch::Approx(6.0 / (kPi * kPi)).epsilon(1e-13));
  REQUIRE(src.frequency(0) == Catch::Approx(6.0 / (kPi * kPi)).epsilon(1e-13));
  REQUIRE(src.frequency(1) == Catch::Approx(6.0 / (kPi * kPi) / 4.0).epsilon(1e-13));
  double prev = 1.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double p = src.frequency(i);
    REQUIRE(p < prev);
    prev = p;
  }
  REQUIRE_THROWS_AS(FrequencySource::power_law(1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(FrequencySource::power_law(0.0), std::invalid_argument);
}

TEST_CASE("power law prefix sums capture almost all mass") {
  auto src = FrequencySource::power_law(0.5);
  // sum_{j<=1e6} P_j > 0.999999 via the tail identity
  REQUIRE(src.tail_after(1000000) < 1e-6);
  REQUIRE(src.tail_after(1000000) > 0.0);
}

TEST_CASE("prefix plus tail is one") {
  auto power = FrequencySource::power_law(0.4);
  power.extend(2000);
  double prefix = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) prefix += power.frequency(i);
  REQUIRE(prefix + power.tail_mass() == Catch::Approx(1.0).margin(1e-12));

  auto stick = FrequencySource::stick_breaking(make_params(0.5, 0.5), 11);
  stick.extend(1000);
  double sum = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    REQUIRE(stick.frequency(i) > 0.0);
    sum += stick.frequency(i);
  }
  REQUIRE(sum < 1.0);  // infinite support
  REQUIRE(sum + stick.tail_mass() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("stick-breaking determinism and first-frequency mean") {
  auto a = FrequencySource::stick_breaking(make_params(0.5, 0.5), 99);
  auto b = FrequencySource::stick_breaking(make_params(0.5, 0.5), 99);
  a.extend(1000);
  b.extend(1000);
  for (std::size_t i = 0; i < 1000; ++i) REQUIRE(a.frequency(i) == b.frequency(i));

  // E P_1 = (1-alpha)/(1+theta) = 1/3 at (0.5, 0.5)
  const int sources = 100000;
  double s = 0.0;
  for (int k = 0; k < sources; ++k) {
    auto src = FrequencySource::stick_breaking(make_params(0.5, 0.5), derive_seed(5, k));
    s += src.frequency(0);
  }
  const double mean = s / sources;
  REQUIRE(std::fabs(mean - 1.0 / 3.0) < 4.0 * 0.3 / std::sqrt(static_cast<double>(sources)));

  REQUIRE_THROWS_AS(FrequencySource::stick_breaking(make_params(0.0, 1.0), 1),
                    std::logic_error);
}

TEST_CASE("inverse-CDF sampling lands in proportion to the frequencies") {
  auto src = FrequencySource::power_law(0.5);
  RandomStream rng(4);
  std::vector<int> hits(8, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t id = src.sample_index(rng.uniform());
    if (id < hits.size()) ++hits[id];
  }
  for (std::size_t j = 0; j < hits.size(); ++j) {
    const double expect = src.frequency(j) * n;
    REQUIRE(std::fabs(hits[j] - expect) < 4.0 * std::sqrt(expect) + 4.0);
  }
}

TEST_CASE("freeze materializes the tail threshold and stays exact for power laws") {
  auto src = FrequencySource::power_law(0.5);
  src.freeze(1e-4);
  REQUIRE(src.is_frozen());
  REQUIRE(src.tail_mass() < 1e-4);
  REQUIRE_THROWS_AS(src.extend(src.generated() + 10), std::logic_error);

  // the frozen sampler agrees with the inverse-CDF law on the first urns
  FrozenSampler fast(src);
  RandomStream rng(8);
  std::vector<int> hits(4, 0);
  const int n = 200000;
  int far = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t id = fast.sample(rng);
    if (id < hits.size()) ++hits[id];
    if (id >= src.generated()) ++far;
  }
  for (std::size_t j = 0; j < hits.size(); ++j) {
    const double expect = src.frequency(j) * n;
    REQUIRE(std::fabs(hits[j] - expect) < 4.0 * std::sqrt(expect) + 4.0);
  }
  // tail hits occur at roughly tail_mass rate and carry real urn ids
  REQUIRE(std::fabs(far - n * src.tail_mass()) < 4.0 * std::sqrt(n * src.tail_mass()) + 4.0);
}

TEST_CASE("analytic tail inversion produces the conditional tail law") {
  auto src = FrequencySource::power_law(0.5);
  src.freeze(1e-3);
  const std::size_t m = src.generated();
  const double tail = src.tail_mass();
  // P(first tail urn | tail) = p_{m+1} / tail
  const double p_first = src.frequency(m) / tail;
  RandomStream rng(12);
  const int n = 100000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    if (src.invert_tail(rng.uniform()) == m) ++first;
  }
  REQUIRE(std::fabs(static_cast<double>(first) / n - p_first) <
          4.0 * std::sqrt(p_first / n) + 1e-4);
}

TEST_CASE("stick freeze represents the tail as virtual urns") {
  auto src = FrequencySource::stick_breaking(make_params(0.6, 0.0), 3);
  src.freeze(1e-3);
  REQUIRE(src.is_frozen());
  FrozenSampler fast(src);
  RandomStream rng(1);
  bool saw_virtual = false;
  for (int i = 0; i < 200000 && !saw_virtual; ++i) {
    saw_virtual = fast.sample(rng) == FrequencySource::kVirtualUrn;
  }
  REQUIRE(saw_virtual);  // tail mass ~1e-3, so ~200 hits expected
}
