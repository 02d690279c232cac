#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fhout/model.hpp"
#include "fhout/rng.hpp"

using namespace fhout;
using Catch::Approx;

TEST_CASE("NetworkConfig validation") {
  NetworkConfig ok{10, 3, 100.0, 5};
  REQUIRE_NOTHROW(ok.validate());
  REQUIRE(ok.hop_fraction() == Approx(0.3));
  REQUIRE_THROWS_AS((NetworkConfig{10, 0, 1.0, 5}.validate()), std::invalid_argument);
  REQUIRE_THROWS_AS((NetworkConfig{10, 11, 1.0, 5}.validate()), std::invalid_argument);
  REQUIRE_THROWS_AS((NetworkConfig{10, 3, 0.0, 5}.validate()), std::invalid_argument);
  // n_des must divide u only where FD is computed.
  NetworkConfig odd{10, 3, 1.0, 3};
  REQUIRE_NOTHROW(odd.validate());
  REQUIRE_THROWS_AS(odd.validate_fd(), std::invalid_argument);
  REQUIRE(db_to_linear(20.0) == Approx(100.0));
  REQUIRE(db_to_linear(-30.0) == Approx(1e-3));
}

TEST_CASE("UserCountPmf invariants") {
  UserCountPmf pmf({0.5, 0.3, 0.2});
  REQUIRE(pmf.n_max() == 3);
  REQUIRE(pmf.q(0) == 0.0);
  REQUIRE(pmf.q(2) == 0.3);
  REQUIRE(pmf.q(4) == 0.0);
  REQUIRE(pmf.mean() == Approx(1.7));
  REQUIRE(pmf.min_positive() == 0.2);

  // Trailing zeros do not count towards n_max.
  REQUIRE(UserCountPmf({0.5, 0.5, 0.0, 0.0}).n_max() == 2);
  REQUIRE(UserCountPmf::degenerate(3).q(3) == 1.0);

  REQUIRE_THROWS_AS(UserCountPmf({0.5, 0.4}), std::invalid_argument);
  REQUIRE_THROWS_AS(UserCountPmf({1.2, -0.2}), std::invalid_argument);
  REQUIRE_THROWS_AS(UserCountPmf(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("Rng reproducibility and stream independence") {
  const RngSpec spec{42, 7};
  Rng a(spec), b(spec), c(spec.child(0)), d(RngSpec{42, 8});
  bool differs_child = false, differs_stream = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next();
    REQUIRE(x == b.next());
    differs_child = differs_child || x != c.next();
    differs_stream = differs_stream || x != d.next();
  }
  REQUIRE(differs_child);
  REQUIRE(differs_stream);
  REQUIRE(spec.child(3) == spec.child(3));
  REQUIRE_FALSE(spec.child(3) == spec.child(4));

  Rng u(spec);
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x <= 1.0);
  }
}

TEST_CASE("sample_user_count frequencies") {
  SECTION("degenerate") {
    Rng rng(RngSpec{1, 0});
    const auto pmf = UserCountPmf::degenerate(1);
    for (int i = 0; i < 1000; ++i) REQUIRE(sample_user_count(pmf, rng) == 1);
  }
  SECTION("fair coin: 3 sigma binomial interval") {
    Rng rng(RngSpec{2, 0});
    const UserCountPmf pmf({0.5, 0.5});
    int ones = 0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) ones += sample_user_count(pmf, rng) == 1;
    const double freq = static_cast<double>(ones) / draws;
    REQUIRE(freq >= 0.4985);
    REQUIRE(freq <= 0.5015);
  }
  SECTION("mean of (0.5, 0.3, 0.2)") {
    Rng rng(RngSpec{3, 0});
    const UserCountPmf pmf({0.5, 0.3, 0.2});
    double sum = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) sum += sample_user_count(pmf, rng);
    // Var N = 0.61, so the mean has sigma 7.8e-4.
    REQUIRE(std::abs(sum / draws - 1.7) <= 0.002);
  }
}

TEST_CASE("sample_channel moments") {
  Rng rng(RngSpec{4, 0});
  REQUIRE(sample_channel(1, rng).cross.empty());
  REQUIRE_THROWS_AS(sample_channel(0, rng), std::invalid_argument);

  const int draws = 1000000;
  double direct = 0.0, direct_sq = 0.0, j = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto d = sample_channel(3, rng);
    REQUIRE(d.cross.size() == 2);
    REQUIRE(d.n() == 3);
    direct += d.direct;
    direct_sq += d.direct * d.direct;
    j += d.interference_sum();
  }
  REQUIRE(std::abs(direct / draws - 1.0) <= 0.003);
  // E X^2 = 2 for Exp(1).
  REQUIRE(std::abs(direct_sq / draws - 2.0) <= 0.02);
  // J_3 ~ Gamma(2, 1): mean 2, sd sqrt(2)/1000 for the mean.
  REQUIRE(std::abs(j / draws - 2.0) <= 0.005);
}

TEST_CASE("sampling is bit-identical for a fixed RngSpec") {
  auto draw_all = [] {
    Rng rng(RngSpec{99, 5});
    std::vector<double> xs;
    const UserCountPmf pmf({0.4, 0.2, 0.2, 0.2});
    for (int i = 0; i < 1000; ++i) {
      const auto d = sample_channel(sample_user_count(pmf, rng), rng);
      xs.push_back(d.direct);
      xs.insert(xs.end(), d.cross.begin(), d.cross.end());
    }
    return xs;
  };
  REQUIRE(draw_all() == draw_all());
}

TEST_CASE("poisson_truncated_pmf") {
  REQUIRE_THROWS_AS(poisson_truncated_pmf(0.0, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(poisson_truncated_pmf(-1.0, 5), std::invalid_argument);

  REQUIRE(poisson_truncated_pmf(1e-9, 10).q(1) == Approx(1.0).epsilon(1e-8));

  const auto one = poisson_truncated_pmf(1.0, 10);
  REQUIRE(one.q(1) / one.q(2) == Approx(1.0).epsilon(1e-14));

  // Oracle: direct summation of the shifted Poisson mean.
  const double lambda = 2.0;
  const auto pmf = poisson_truncated_pmf(lambda, 20);
  double w = std::exp(-lambda), total = 0.0, first = 0.0;
  for (int k = 0; k < 20; ++k) {
    if (k > 0) w *= lambda / k;
    total += w;
    first += (k + 1) * w;
  }
  REQUIRE(std::abs(pmf.mean() - first / total) <= 1e-12);
  REQUIRE(std::abs(pmf.mean() - (1.0 + lambda)) <= 1e-3);
  REQUIRE(pmf.q(3) == Approx(std::exp(-lambda) * lambda * lambda / 2.0 / total).epsilon(1e-12));
}
