#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "fhout/error.hpp"
#include "fhout/rng.hpp"

namespace fhout {

/// System parameters of the hopping network. Only the SNR ratio P/sigma^2 is
/// kept (linear scale); transmit power and noise never appear on their own.
struct NetworkConfig {
  int u = 1;          // total sub-bands
  int v = 1;          // sub-bands hopped per user
  double gamma = 1.0; // SNR, linear
  int n_des = 1;      // licensees the FD plan is designed for

  double hop_fraction() const { return static_cast<double>(v) / u; }

  void validate() const {
    detail::require(u >= 1, "NetworkConfig: u must be >= 1");
    detail::require(v >= 1 && v <= u, "NetworkConfig: v must satisfy 1 <= v <= u");
    detail::require(std::isfinite(gamma) && gamma > 0.0, "NetworkConfig: gamma must be positive");
    detail::require(n_des >= 1, "NetworkConfig: n_des must be >= 1");
  }

  // FD needs whole bands per licensee.
  void validate_fd() const {
    validate();
    detail::require(u % n_des == 0, "NetworkConfig: n_des must divide u for FD");
  }

  NetworkConfig with_v(int new_v) const {
    NetworkConfig c = *this;
    c.v = new_v;
    return c;
  }

  NetworkConfig with_gamma(double new_gamma) const {
    NetworkConfig c = *this;
    c.gamma = new_gamma;
    return c;
  }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Distribution of the number of active users, N in {1, ..., n_max}.
class UserCountPmf {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// probs[k] is Pr{N = k + 1}. Trailing zeros are dropped.
  explicit UserCountPmf(std::vector<double> probs) : probs_(std::move(probs)) {
    while (!probs_.empty() && probs_.back() == 0.0) probs_.pop_back();
    detail::require(!probs_.empty(), "UserCountPmf: needs at least one positive mass");
    double total = 0.0;
    for (double q : probs_) {
      detail::require(std::isfinite(q) && q >= 0.0, "UserCountPmf: masses must be finite and non-negative");
      total += q;
    }
    detail::require(std::abs(total - 1.0) <= kSumTolerance, "UserCountPmf: masses must sum to 1");
  }

  static UserCountPmf degenerate(int n) {
    detail::require(n >= 1, "UserCountPmf: n must be >= 1");
    std::vector<double> p(static_cast<std::size_t>(n), 0.0);
    p.back() = 1.0;
    return UserCountPmf(std::move(p));
  }

  int n_max() const { return static_cast<int>(probs_.size()); }

  double q(int n) const {
    if (n < 1 || n > n_max()) return 0.0;
    return probs_[static_cast<std::size_t>(n - 1)];
  }

  std::span<const double> probs() const { return probs_; }

  double mean() const {
    double m = 0.0;
    for (int n = 1; n <= n_max(); ++n) m += n * q(n);
    return m;
  }

  /// Smallest positive mass; outage targets are meaningful below it.
  double min_positive() const {
    double m = 1.0;
    for (double q : probs_)
      if (q > 0.0) m = std::min(m, q);
    return m;
  }

 private:
  std::vector<double> probs_;
};

/// One realization of the reference user's channel: direct gain |h_ii|^2 and
/// the N-1 crossover gains |h_ji|^2.
struct ChannelDraw {
  double direct = 1.0;
  std::vector<double> cross;

  int n() const { return static_cast<int>(cross.size()) + 1; }

  /// Sum of crossover gains (zero for a lone user).
  double interference_sum() const { return std::accumulate(cross.begin(), cross.end(), 0.0); }
};

inline int sample_user_count(const UserCountPmf& pmf, Rng& rng) {
  const double x = rng.uniform();
  double cdf = 0.0;
  for (int n = 1; n <= pmf.n_max(); ++n) {
    cdf += pmf.q(n);
    if (x <= cdf) return n;
  }
  return pmf.n_max();  // rounding slack in the cumulative sum
}

inline ChannelDraw sample_channel(int n, Rng& rng) {
  detail::require(n >= 1, "sample_channel: n must be >= 1");
  ChannelDraw draw;
  draw.direct = rng.exponential();
  draw.cross.resize(static_cast<std::size_t>(n - 1));
  for (double& g : draw.cross) g = rng.exponential();
  return draw;
}

/// Poisson(lambda) law of the other active users, shifted by one for the
/// reference user and renormalized over {1, ..., n_max}.
inline UserCountPmf poisson_truncated_pmf(double lambda, int n_max) {
  detail::require(std::isfinite(lambda) && lambda > 0.0, "poisson_truncated_pmf: lambda must be positive");
  detail::require(n_max >= 1, "poisson_truncated_pmf: n_max must be >= 1");
  std::vector<double> logw(static_cast<std::size_t>(n_max));
  double log_fact = 0.0;
  for (int k = 0; k < n_max; ++k) {
    if (k > 0) log_fact += std::log(static_cast<double>(k));
    logw[static_cast<std::size_t>(k)] = k * std::log(lambda) - log_fact;
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(logw.size());
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) total += (w[k] = std::exp(logw[k] - top));
  for (double& x : w) x /= total;
  // Trailing masses that underflow to zero are trimmed by UserCountPmf.
  return UserCountPmf(std::move(w));
}

}  // namespace fhout
