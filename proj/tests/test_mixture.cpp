#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "fhout/mixture.hpp"

using namespace fhout;
using Catch::Approx;

namespace {

const double kLog2PiE = std::log2(std::numbers::pi * std::numbers::e);

// Brute-force mixture: iterate subsets explicitly, accumulate into a map.
std::map<double, double> enumerate_subsets(const std::vector<double>& cross, int v, int u) {
  const double p = static_cast<double>(v) / u;
  const int k = static_cast<int>(cross.size());
  std::map<double, double> out;
  for (int mask = 0; mask < (1 << k); ++mask) {
    double level = 0.0, prob = 1.0;
    for (int j = 0; j < k; ++j) {
      if (mask >> j & 1) {
        level += cross[static_cast<std::size_t>(j)];
        prob *= p;
      } else {
        prob *= 1.0 - p;
      }
    }
    if (prob > 0.0) out[level / v] += prob;
  }
  return out;
}

ScalarMixture random_mixture(std::mt19937_64& gen, int max_l, int max_t) {
  std::uniform_int_distribution<int> pick_l(1, max_l), pick_t(1, max_t);
  std::uniform_real_distribution<double> unit(0.05, 1.0), logvar(-2.0, 4.0);
  const int L = pick_l(gen);
  std::vector<double> var(static_cast<std::size_t>(L)), p(static_cast<std::size_t>(L));
  double total = 0.0;
  for (int l = 0; l < L; ++l) {
    var[static_cast<std::size_t>(l)] = std::exp(logvar(gen));
    total += p[static_cast<std::size_t>(l)] = unit(gen);
  }
  for (double& x : p) x /= total;
  // Renormalize against rounding so the sum check passes at 1e-12.
  double s = 0.0;
  for (std::size_t l = 0; l + 1 < p.size(); ++l) s += p[l];
  p.back() = 1.0 - s;
  return ScalarMixture(var, p, pick_t(gen));
}

}  // namespace

TEST_CASE("build_mixture matches subset enumeration") {
  SECTION("single user") {
    const auto mix = build_mixture(ChannelDraw{0.7, {}}, NetworkConfig{4, 2, 10.0, 1});
    REQUIRE(mix.levels == std::vector<double>{0.0});
    REQUIRE(mix.probs == std::vector<double>{1.0});
  }
  SECTION("v = u makes occupancy certain") {
    const auto mix = build_mixture(ChannelDraw{1.0, {0.8}}, NetworkConfig{5, 5, 10.0, 1});
    REQUIRE(mix.size() == 1);
    REQUIRE(mix.levels[0] == Approx(0.8 / 5));
    REQUIRE(mix.probs[0] == 1.0);
  }
  SECTION("n = 3, v = 1, u = 2, cross = (1, 2)") {
    const auto mix = build_mixture(ChannelDraw{1.0, {1.0, 2.0}}, NetworkConfig{2, 1, 1.0, 1});
    REQUIRE(mix.levels == std::vector<double>{0.0, 1.0, 2.0, 3.0});
    for (double a : mix.probs) REQUIRE(a == Approx(0.25));
  }
  SECTION("random draws") {
    std::mt19937_64 gen(11);
    std::exponential_distribution<double> expo(1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + static_cast<int>(gen() % 8);
      const int u = 2 + static_cast<int>(gen() % 12);
      const int v = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(u));
      ChannelDraw d{expo(gen), {}};
      for (int j = 1; j < n; ++j) d.cross.push_back(expo(gen));
      const auto mix = build_mixture(d, NetworkConfig{u, v, 3.0, 1});
      const auto ref = enumerate_subsets(d.cross, v, u);
      REQUIRE(mix.size() == ref.size());
      double total = 0.0;
      std::size_t l = 0;
      for (const auto& [level, prob] : ref) {
        REQUIRE(mix.levels[l] == Approx(level).margin(1e-15));
        REQUIRE(mix.probs[l] == Approx(prob).margin(1e-15));
        if (l > 0) REQUIRE(mix.levels[l] > mix.levels[l - 1]);
        total += mix.probs[l];
        ++l;
      }
      REQUIRE(total == Approx(1.0).margin(1e-12));
    }
  }
  SECTION("equal crossover gains merge") {
    const auto mix = build_mixture(ChannelDraw{1.0, {0.5, 0.5}}, NetworkConfig{4, 2, 1.0, 1});
    REQUIRE(mix.size() == 3);
    REQUIRE(mix.probs[1] == Approx(0.5));
  }
  SECTION("enumeration cap") {
    ChannelDraw big{1.0, std::vector<double>(21, 1.0)};
    REQUIRE_THROWS_AS(build_mixture(big, NetworkConfig{4, 1, 1.0, 1}), EnumerationLimit);
  }
}

TEST_CASE("ScalarMixture validation and merge") {
  REQUIRE_THROWS_AS(ScalarMixture({1.0}, {0.5}), std::invalid_argument);
  REQUIRE_THROWS_AS(ScalarMixture({1.0, -1.0}, {0.5, 0.5}), std::invalid_argument);
  REQUIRE_THROWS_AS(ScalarMixture({1.0}, {1.0}, 0), std::invalid_argument);
  const ScalarMixture m({2.0, 1.0, 2.0}, {0.25, 0.5, 0.25});
  REQUIRE(m.size() == 2);
  REQUIRE(m.variances()[0] == 1.0);
  REQUIRE(m.probs()[1] == 0.5);
}

TEST_CASE("entropy_upper_bound closed-form values") {
  REQUIRE(entropy_upper_bound(ScalarMixture({1.0}, {1.0})) == Approx(kLog2PiE).margin(1e-14));
  REQUIRE(kLog2PiE == Approx(3.0942).margin(1e-4));
  REQUIRE(entropy_upper_bound(ScalarMixture({2.0}, {1.0}, 3)) == Approx(3.0 * std::log2(std::numbers::pi * std::numbers::e * 2.0)));
  REQUIRE(mixing_gap(ScalarMixture({5.0}, {1.0})) == 0.0);

  // Two components collapsing onto one variance.
  const double delta = 1e-9;
  const ScalarMixture near({1.0, 1.0 + delta}, {0.5, 0.5});
  REQUIRE(entropy_upper_bound(near) == Approx(kLog2PiE + 1.0 - 0.5).margin(1e-8));

  // Hand value: t = 2, variances (1, 4): ratio 16, gap = 0.5 log2(17) / 16.
  const ScalarMixture vec({1.0, 4.0}, {0.5, 0.5}, 2);
  REQUIRE(mixing_gap(vec) == Approx(0.5 * std::log2(17.0) / 16.0).epsilon(1e-14));
}

TEST_CASE("mixing gap variants are ordered and non-negative") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_mixture(gen, 8, 3);
    const double coarse = mixing_gap(m, GapVariant::kCoarse);
    const double mid = mixing_gap(m, GapVariant::kIntermediate);
    const double tight = mixing_gap(m, GapVariant::kTight);
    REQUIRE(coarse >= 0.0);
    REQUIRE(mid >= coarse - 1e-12);
    REQUIRE(tight >= mid - 1e-12);
    REQUIRE(entropy_upper_bound(m, GapVariant::kTight) <= entropy_upper_bound(m) + 1e-12);
  }
}

TEST_CASE("entropy_mc_estimate") {
  REQUIRE_THROWS_AS(entropy_mc_estimate(ScalarMixture({1.0}, {1.0}), 9999, RngSpec{}), std::invalid_argument);

  SECTION("pure Gaussian") {
    const auto e = entropy_mc_estimate(ScalarMixture({1.0}, {1.0}), 200000, RngSpec{1, 0});
    REQUIRE(std::abs(e.estimate - kLog2PiE) <= 3.0 * e.std_error);
  }
  SECTION("merged equal variances equal the single Gaussian") {
    const auto e = entropy_mc_estimate(ScalarMixture({2.0, 2.0}, {0.5, 0.5}, 2), 200000, RngSpec{2, 0});
    const double exact = 2.0 * std::log2(std::numbers::pi * std::numbers::e * 2.0);
    REQUIRE(std::abs(e.estimate - exact) <= 3.0 * e.std_error);
  }
  SECTION("merging leaves the estimate unchanged") {
    const std::vector<double> var{1.0, 3.0, 3.0}, p{0.4, 0.3, 0.3};
    const ScalarMixture merged({1.0, 3.0}, {0.4, 0.6});
    const auto raw = detail::mixture_entropy_mc(var, p, 1, 100000, RngSpec{3, 0});
    const auto m = entropy_mc_estimate(merged, 100000, RngSpec{3, 0});
    REQUIRE(raw.estimate == Approx(m.estimate).epsilon(1e-12));
  }
  SECTION("reproducible") {
    const ScalarMixture m({1.0, 10.0}, {0.3, 0.7}, 2);
    REQUIRE(entropy_mc_estimate(m, 50000, RngSpec{4, 1}).estimate ==
            entropy_mc_estimate(m, 50000, RngSpec{4, 1}).estimate);
  }
  SECTION("bound dominates the estimate on random mixtures") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = random_mixture(gen, 8, 3);
      const auto e = entropy_mc_estimate(m, 100000, RngSpec{5, static_cast<std::uint64_t>(trial)});
      REQUIRE(e.estimate <= entropy_upper_bound(m) + 3.0 * e.std_error);
      // Entropy never exceeds the entropy of the moment-matched Gaussian.
      double second = 0.0;
      for (std::size_t l = 0; l < m.size(); ++l) second += m.probs()[l] * m.variances()[l];
      REQUIRE(e.estimate <= m.dim() * std::log2(std::numbers::pi * std::numbers::e * second) + 3.0 * e.std_error);
    }
  }
}
