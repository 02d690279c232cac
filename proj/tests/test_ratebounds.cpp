#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fhout/ratebounds.hpp"

using namespace fhout;
using Catch::Approx;

namespace {

struct DrawCase {
  ChannelDraw draw;
  NetworkConfig cfg;
};

DrawCase random_case(std::mt19937_64& gen, int max_n) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> log_gamma(-1.0, 4.0);
  DrawCase c;
  c.cfg.u = 2 + static_cast<int>(gen() % 15);
  c.cfg.v = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(c.cfg.u));
  c.cfg.gamma = std::pow(10.0, log_gamma(gen));
  const int n = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(max_n));
  c.draw.direct = expo(gen);
  for (int j = 1; j < n; ++j) c.draw.cross.push_back(expo(gen));
  return c;
}

// Independent evaluation of the full-mixture bound: explicit subset loop,
// explicit binomial sum for the mixing gain, product taken in linear scale.
double lb1_oracle(const ChannelDraw& d, const NetworkConfig& cfg) {
  const int k = static_cast<int>(d.cross.size());
  const double p = static_cast<double>(cfg.v) / cfg.u;
  double product = 1.0;
  for (int mask = 0; mask < (1 << k); ++mask) {
    double level = 0.0, prob = 1.0;
    for (int j = 0; j < k; ++j) {
      const bool in = mask >> j & 1;
      level += in ? d.cross[static_cast<std::size_t>(j)] : 0.0;
      prob *= in ? p : 1.0 - p;
    }
    product *= std::pow(level * cfg.gamma / cfg.v + 1.0, prob);
  }
  const double H = p < 1.0 ? -k * (p * std::log2(p) + (1 - p) * std::log2(1 - p)) : 0.0;
  const double cl = cfg.gamma / cfg.v * d.interference_sum();
  double expect = 0.0;
  for (int b = 0; b <= k; ++b) {
    const double binom = std::tgamma(k + 1.0) / (std::tgamma(b + 1.0) * std::tgamma(k - b + 1.0));
    expect += binom * std::pow(p, b) * std::pow(1 - p, k - b) * std::log2(1.0 + (1.0 - std::pow(p, b)) * cl);
  }
  const double G = k == 0 ? 0.0 : (expect - k * p * std::log2(p)) / (cl + 1.0);
  return cfg.v * std::log2(std::exp2(-H + G) * d.direct * cfg.gamma / (cfg.v * product) + 1.0);
}

}  // namespace

TEST_CASE("fair-system statistics") {
  REQUIRE(h_fair(7, 7, 5) == 0.0);
  REQUIRE(h_fair(3, 6, 3) == Approx(2.0));
  REQUIRE(h_fair(1, 10, 2) == Approx(0.469).margin(5e-4));
  REQUIRE(h_fair(3, 10, 1) == 0.0);
  REQUIRE(a_zero(4, 4, 3) == 0.0);
  REQUIRE(a_zero(2, 9, 1) == 1.0);
  REQUIRE(a_zero(1, 4, 3) == Approx(0.5625));

  REQUIRE(g_lb(2, 5, 1, 3.0, 10.0) == 0.0);
  REQUIRE(g_lb(5, 5, 4, 3.0, 10.0) == Approx(0.0).margin(1e-15));
  // alpha_2(1; 1, 0.5) by hand: [0.5 log2(1.5) + 0.5] / 2.
  REQUIRE(g_lb(5, 10, 2, 1.0, 5.0) == Approx(0.39624).margin(1e-5));
  REQUIRE(g_lb(2, 8, 3, 1e12, 4.0) < 1e-9);
  REQUIRE(g_lb(2, 8, 3, 0.0, 4.0) == Approx(-2 * 0.25 * std::log2(0.25)));
  const auto st = fair_system_stats(1, 10, 2, 0.0, 1.0);
  REQUIRE(st.h_fair == h_fair(1, 10, 2));
  REQUIRE(st.a_zero == Approx(0.9));
}

TEST_CASE("single user rates") {
  const ChannelDraw d{0.8, {}};
  const NetworkConfig cfg{8, 3, 50.0, 4};
  const double expected = 3 * std::log2(1.0 + 0.8 * 50.0 / 3);
  REQUIRE(rate_lb1(d, cfg) == Approx(expected).epsilon(1e-14));
  REQUIRE(rate_lb2(d, cfg) == Approx(expected).epsilon(1e-14));
  REQUIRE(rate_fbs(d, cfg) == Approx(8 * std::log2(1.0 + 0.8 * 50.0 / 8)));
  REQUIRE(rate_fbs(ChannelDraw{1.0, {}}, NetworkConfig{6, 1, 6.0, 1}) == Approx(6.0));
  REQUIRE(rate_fd(d, cfg) == Approx(2 * std::log2(1.0 + 0.8 * 50.0 * 4 / 8)));
}

TEST_CASE("rate_lb1 matches the brute-force oracle") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_case(gen, 7);
    REQUIRE(rate_lb1(c.draw, c.cfg) == Approx(lb1_oracle(c.draw, c.cfg)).epsilon(1e-10).margin(1e-12));
  }
}

TEST_CASE("bound chain and v = u collapse") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_case(gen, 6);
    const double r1 = rate_lb1(c.draw, c.cfg), r2 = rate_lb2(c.draw, c.cfg);
    REQUIRE(r2 >= 0.0);
    REQUIRE(r1 >= r2 - 1e-9);
    REQUIRE(rate_gaussian(c.draw, c.cfg) <= rate_fbs(c.draw, c.cfg) + 1e-12);

    c.cfg.v = c.cfg.u;
    const double fbs = rate_fbs(c.draw, c.cfg);
    REQUIRE(rate_lb1(c.draw, c.cfg) == Approx(fbs).epsilon(1e-12));
    REQUIRE(rate_lb2(c.draw, c.cfg) == Approx(fbs).epsilon(1e-12));
    REQUIRE(rate_gaussian(c.draw, c.cfg) == Approx(fbs).epsilon(1e-12));
  }
}

TEST_CASE("rate monotonicity in the gains") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_case(gen, 5);
    if (c.draw.cross.empty()) continue;
    auto stronger = c.draw;
    stronger.direct *= 1.5;
    auto louder = c.draw;
    louder.cross[0] *= 2.0;
    for (auto rate : {rate_lb1, rate_lb2, rate_fbs, rate_gaussian}) {
      REQUIRE(rate(stronger, c.cfg) > rate(c.draw, c.cfg));
      REQUIRE(rate(louder, c.cfg) <= rate(c.draw, c.cfg) + 1e-12);
    }
  }
}

TEST_CASE("Gaussian baseline") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_case(gen, 6);
    for (int v = 1; v < c.cfg.u; ++v) {
      REQUIRE(rate_gaussian(c.draw, c.cfg.with_v(v)) <= rate_gaussian(c.draw, c.cfg.with_v(v + 1)));
    }
  }
  const ChannelDraw d{1.3, {0.4, 0.9}};
  const NetworkConfig cfg{10, 3, 1e12, 1};
  REQUIRE(rate_gaussian(d, cfg) == Approx(3 * std::log2(1.0 + 10 * 1.3 / (3 * 1.3))).epsilon(1e-9));
  REQUIRE(rate_fbs(ChannelDraw{1.0, {1e15}}, NetworkConfig{4, 2, 10.0, 1}) < 1e-12);
}

TEST_CASE("stats depend on the cross gains only through their sum") {
  const NetworkConfig cfg{9, 2, 30.0, 1};
  ChannelDraw a{0.9, {0.3, 1.7, 0.5}};
  ChannelDraw b = a;
  std::reverse(b.cross.begin(), b.cross.end());
  REQUIRE(rate_lb2(a, cfg) == Approx(rate_lb2(b, cfg)).epsilon(1e-15));
  REQUIRE(rate_lb1(a, cfg) == Approx(rate_lb1(b, cfg)).epsilon(1e-13));
  const ChannelDraw c{0.9, {1.0, 1.0, 0.5}};
  REQUIRE(g_lb(2, 9, 4, a.interference_sum(), 30.0) == Approx(g_lb(2, 9, 4, c.interference_sum(), 30.0)).epsilon(1e-14));
}
