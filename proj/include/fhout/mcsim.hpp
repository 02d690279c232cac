#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fhout/capacity.hpp"
#include "fhout/error.hpp"
#include "fhout/model.hpp"
#include "fhout/parallel.hpp"
#include "fhout/ratebounds.hpp"
#include "fhout/rng.hpp"

// Monte Carlo oracle: draws N ~ pmf and Rayleigh gains, evaluates a per-draw
// rate bound, and reads outage probabilities and capacities off the sample.

namespace fhout {

enum class RateBound { kLb1, kLb2, kFbs, kGaussian, kFd };

inline std::string_view to_string(RateBound b) {
  switch (b) {
    case RateBound::kLb1: return "lb1";
    case RateBound::kLb2: return "lb2";
    case RateBound::kFbs: return "fbs";
    case RateBound::kGaussian: return "gaussian";
    case RateBound::kFd: return "fd";
  }
  return "?";
}

inline double evaluate_rate(RateBound bound, const ChannelDraw& draw, const NetworkConfig& cfg) {
  switch (bound) {
    case RateBound::kLb1: return rate_lb1(draw, cfg);
    case RateBound::kLb2: return rate_lb2(draw, cfg);
    case RateBound::kFbs: return rate_fbs(draw, cfg);
    case RateBound::kGaussian: return rate_gaussian(draw, cfg);
    case RateBound::kFd: return rate_fd(draw, cfg);
  }
  return 0.0;
}

namespace detail {
inline constexpr std::int64_t kDrawBlock = 1 << 14;
}  // namespace detail

/// Per-draw rates in draw order. Block b uses stream rng.child(b), so the
/// vector is identical for any thread count.
inline std::vector<double> sample_rates(RateBound bound, const OutageQuery& query, std::int64_t samples,
                                        const RngSpec& rng) {
  detail::require(samples >= 1, "sample_rates: samples must be >= 1");
  if (bound == RateBound::kFd) {
    query.cfg.validate_fd();
  } else {
    query.cfg.validate();
  }
  std::vector<double> rates(static_cast<std::size_t>(samples));
  const std::int64_t blocks = (samples + detail::kDrawBlock - 1) / detail::kDrawBlock;
  detail::parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    Rng gen(rng.child(b));
    const std::int64_t begin = static_cast<std::int64_t>(b) * detail::kDrawBlock;
    const std::int64_t end = std::min(samples, begin + detail::kDrawBlock);
    for (std::int64_t i = begin; i < end; ++i) {
      // The FD licensee sees no interference whatever N is.
      const int n = bound == RateBound::kFd ? 1 : sample_user_count(query.pmf, gen);
      rates[static_cast<std::size_t>(i)] = evaluate_rate(bound, sample_channel(n, gen), query.cfg);
    }
  });
  return rates;
}

/// Sorted sample of per-draw rates.
class RateSample {
 public:
  explicit RateSample(std::vector<double> rates) : sorted_(std::move(rates)) {
    detail::require(!sorted_.empty(), "RateSample: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

  /// Fraction of draws with rate strictly below R.
  double outage(double R) const {
    const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), R);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  /// Order-statistic quantile with linear interpolation between neighbours.
  double quantile(double p) const {
    detail::require(p >= 0.0 && p <= 1.0, "RateSample::quantile: p must lie in [0, 1]");
    const double h = p * static_cast<double>(sorted_.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(h));
    if (k + 1 >= sorted_.size()) return sorted_.back();
    return sorted_[k] + (h - static_cast<double>(k)) * (sorted_[k + 1] - sorted_[k]);
  }

  /// Standard error of quantile(p): half the spread between the order
  /// statistics one binomial standard deviation either side of rank n p.
  double quantile_std_error(double p) const {
    const double n = static_cast<double>(sorted_.size());
    const double spread = std::sqrt(n * p * (1.0 - p));
    const double lo = std::clamp(p - spread / n, 0.0, 1.0);
    const double hi = std::clamp(p + spread / n, 0.0, 1.0);
    return 0.5 * (quantile(hi) - quantile(lo));
  }

 private:
  std::vector<double> sorted_;
};

struct McReport {
  double outage_prob = 0.0;
  double std_error = 0.0;  // binomial: sqrt(p (1 - p) / samples)
  std::int64_t samples = 0;
  double rate_quantile = 0.0;  // empirical epsilon-quantile of the rate
};

inline McReport empirical_outage(double R, RateBound bound, const OutageQuery& query, std::int64_t samples,
                                 const RngSpec& rng) {
  detail::require(samples >= 10000, "empirical_outage: need at least 1e4 samples");
  const RateSample sample(sample_rates(bound, query, samples, rng));
  McReport r;
  r.samples = samples;
  r.outage_prob = sample.outage(R);
  r.std_error = std::sqrt(r.outage_prob * (1.0 - r.outage_prob) / static_cast<double>(samples));
  r.rate_quantile = sample.quantile(query.epsilon);
  return r;
}

struct McCapacity {
  double rate = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  bool under_sampled = false;  // samples * epsilon < 100
};

/// Empirical epsilon-outage capacity: the epsilon-quantile of sampled rates.
inline McCapacity empirical_capacity(double epsilon, RateBound bound, const OutageQuery& query, std::int64_t samples,
                                     const RngSpec& rng) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "empirical_capacity: epsilon must lie in (0, 1)");
  const RateSample sample(sample_rates(bound, query, samples, rng));
  McCapacity c;
  c.samples = samples;
  c.rate = sample.quantile(epsilon);
  c.std_error = sample.quantile_std_error(epsilon);
  c.under_sampled = static_cast<double>(samples) * epsilon < 100.0;
  return c;
}

}  // namespace fhout
