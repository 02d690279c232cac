#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fhout/error.hpp"
#include "fhout/model.hpp"
#include "fhout/parallel.hpp"
#include "fhout/rng.hpp"

namespace fhout {

/// Largest interferer count whose 2^(n-1) collision patterns are enumerated.
inline constexpr int kMaxEnumeratedInterferers = 20;

/// Per-sub-band noise-plus-interference law at the reference receiver:
/// variance sigma^2 (1 + levels[l] * gamma) with probability probs[l].
/// Levels are strictly increasing; zero-probability patterns are dropped.
struct InterferenceMixture {
  std::vector<double> levels;
  std::vector<double> probs;

  std::size_t size() const { return levels.size(); }
};

/// Enumerates every subset of interferers that may collide on a given
/// sub-band. Each interferer is present with probability v/u and contributes
/// |h_ji|^2 / v (power spread over v sub-bands). Equal levels are merged.
inline InterferenceMixture build_mixture(const ChannelDraw& draw, const NetworkConfig& cfg) {
  cfg.validate();
  const int k = draw.n() - 1;
  if (k > kMaxEnumeratedInterferers)
    throw EnumerationLimit("build_mixture: more than 20 interferers cannot be enumerated");

  const double p = cfg.hop_fraction();
  std::vector<double> prob_by_count(static_cast<std::size_t>(k) + 1);
  for (int s = 0; s <= k; ++s) prob_by_count[static_cast<std::size_t>(s)] = std::pow(p, s) * std::pow(1.0 - p, k - s);

  const std::uint32_t subsets = 1U << k;
  std::vector<double> sums(subsets, 0.0);
  std::vector<std::pair<double, double>> comps;
  comps.reserve(subsets);
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    if (mask != 0) sums[mask] = sums[mask & (mask - 1)] + draw.cross[static_cast<std::size_t>(std::countr_zero(mask))];
    const double a = prob_by_count[static_cast<std::size_t>(std::popcount(mask))];
    if (a > 0.0) comps.emplace_back(sums[mask] / cfg.v, a);
  }
  std::sort(comps.begin(), comps.end());

  InterferenceMixture mix;
  for (const auto& [level, a] : comps) {
    if (!mix.levels.empty() && mix.levels.back() == level) {
      mix.probs.back() += a;
    } else {
      mix.levels.push_back(level);
      mix.probs.push_back(a);
    }
  }
  return mix;
}

/// Mixture of t-dimensional circular complex Gaussians with covariances
/// variances[l] * I_t. Stored sorted with equal variances merged.
class ScalarMixture {
 public:
  ScalarMixture(std::vector<double> variances, std::vector<double> probs, int dim = 1) : dim_(dim) {
    detail::require(dim >= 1, "ScalarMixture: dim must be >= 1");
    detail::require(!variances.empty() && variances.size() == probs.size(),
                    "ScalarMixture: need matching non-empty variances and probabilities");
    std::vector<std::pair<double, double>> comps;
    double total = 0.0;
    for (std::size_t l = 0; l < variances.size(); ++l) {
      detail::require(std::isfinite(variances[l]) && variances[l] > 0.0, "ScalarMixture: variances must be positive");
      detail::require(std::isfinite(probs[l]) && probs[l] > 0.0, "ScalarMixture: probabilities must be positive");
      comps.emplace_back(variances[l], probs[l]);
      total += probs[l];
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "ScalarMixture: probabilities must sum to 1");
    std::sort(comps.begin(), comps.end());
    for (const auto& [var, p] : comps) {
      if (!variances_.empty() && variances_.back() == var) {
        probs_.back() += p;
      } else {
        variances_.push_back(var);
        probs_.push_back(p);
      }
    }
  }

  std::span<const double> variances() const { return variances_; }
  std::span<const double> probs() const { return probs_; }
  int dim() const { return dim_; }
  std::size_t size() const { return variances_.size(); }

 private:
  std::vector<double> variances_;
  std::vector<double> probs_;
  int dim_;
};

/// Sub-band noise-plus-interference as a scalar mixture, noise power
/// normalized to one.
inline ScalarMixture to_scalar_mixture(const InterferenceMixture& mix, double gamma) {
  std::vector<double> var(mix.size());
  for (std::size_t l = 0; l < var.size(); ++l) var[l] = 1.0 + mix.levels[l] * gamma;
  return ScalarMixture(std::move(var), mix.probs, 1);
}

/// Which lower bound on the mixing gain is subtracted from the entropy bound.
/// kCoarse is the closed form used by all rate bounds; kIntermediate and
/// kTight are the sharper forms it is derived from (kTight >= kIntermediate
/// >= kCoarse).
enum class GapVariant { kCoarse, kIntermediate, kTight };

/// Mixing-gain term subtracted from the Gaussian-plus-label entropy, in bits.
inline double mixing_gap(const ScalarMixture& mix, GapVariant variant = GapVariant::kCoarse) {
  const auto var = mix.variances();
  const auto p = mix.probs();
  const std::size_t L = mix.size();
  const double t = mix.dim();
  if (L == 1) return 0.0;

  // (var[a] / var[b])^t
  auto ratio = [&](std::size_t a, std::size_t b) { return std::pow(var[a] / var[b], t); };

  double gap = 0.0;
  switch (variant) {
    case GapVariant::kCoarse: {
      const double spread = ratio(L - 1, 0);
      double below = p[0];
      for (std::size_t l = 1; l < L; ++l) {
        gap += p[l] * std::log2(1.0 + spread * below / p[l]);
        below += p[l];
      }
      return gap / spread;
    }
    case GapVariant::kIntermediate: {
      double below = p[0];
      for (std::size_t l = 1; l < L; ++l) {
        double nu = 0.0;
        for (std::size_t m = 0; m < l; ++m) nu += p[m] / p[l] * ratio(l, m);
        gap += std::log2(1.0 + nu) / nu * below;
        below += p[l];
      }
      return gap;
    }
    case GapVariant::kTight: {
      double below = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        double mu = 0.0;
        for (std::size_t m = l + 1; m < L; ++m) mu += p[m] / p[l] * ratio(l, m);
        if (l == 0) {
          gap += p[l] * std::log2(1.0 + mu);
        } else {
          double nu = 0.0;
          for (std::size_t m = 0; m < l; ++m) nu += p[m] / p[l] * ratio(l, m);
          const double w = below / nu;
          gap += (p[l] - w) * std::log2(1.0 + mu) + w * std::log2(1.0 + nu + mu);
        }
        below += p[l];
      }
      return gap;
    }
  }
  return gap;
}

/// Upper bound on the differential entropy (bits) of a complex Gaussian
/// mixture: t * sum p_l log2(pi e var_l) + H(p) - gap.
inline double entropy_upper_bound(const ScalarMixture& mix, GapVariant variant = GapVariant::kCoarse) {
  const auto var = mix.variances();
  const auto p = mix.probs();
  double gaussian = 0.0;
  double label = 0.0;
  for (std::size_t l = 0; l < mix.size(); ++l) {
    gaussian += p[l] * std::log2(std::numbers::pi * std::numbers::e * var[l]);
    label -= p[l] * std::log2(p[l]);
  }
  return mix.dim() * gaussian + label - mixing_gap(mix, variant);
}

struct EntropyEstimate {
  double estimate = 0.0;  // bits
  double std_error = 0.0;
};

namespace detail {

inline constexpr std::int64_t kEntropyBlock = 1 << 14;

// Monte Carlo estimate of -E log2 p(Theta) for an arbitrary (possibly
// unmerged) component list. The density depends on Theta only through
// r = |Theta|^2, and r given component l is var_l * Gamma(t, 1).
inline EntropyEstimate mixture_entropy_mc(std::span<const double> variances, std::span<const double> probs, int dim,
                                          std::int64_t samples, const RngSpec& rng) {
  require(samples >= 10000, "entropy_mc_estimate: need at least 1e4 samples");
  const std::size_t L = variances.size();
  std::vector<double> cdf(L), log_norm(L);
  double acc = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    acc += probs[l];
    cdf[l] = acc;
    log_norm[l] = std::log(probs[l]) - dim * std::log(std::numbers::pi * variances[l]);
  }

  const std::int64_t blocks = (samples + kEntropyBlock - 1) / kEntropyBlock;
  std::vector<double> sum(static_cast<std::size_t>(blocks)), sum_sq(static_cast<std::size_t>(blocks));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    Rng gen(rng.child(b));
    const std::int64_t begin = static_cast<std::int64_t>(b) * kEntropyBlock;
    const std::int64_t end = std::min(samples, begin + kEntropyBlock);
    std::vector<double> terms(L);
    double s = 0.0, s2 = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const double x = gen.uniform() * acc;
      std::size_t comp = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
      comp = std::min(comp, L - 1);
      double gamma_draw = 0.0;
      for (int d = 0; d < dim; ++d) gamma_draw += gen.exponential();
      const double r = variances[comp] * gamma_draw;
      double top = -INFINITY;
      for (std::size_t l = 0; l < L; ++l) top = std::max(top, terms[l] = log_norm[l] - r / variances[l]);
      double tail = 0.0;
      for (std::size_t l = 0; l < L; ++l) tail += std::exp(terms[l] - top);
      const double neg_log2_density = -(top + std::log(tail)) / std::numbers::ln2;
      s += neg_log2_density;
      s2 += neg_log2_density * neg_log2_density;
    }
    sum[b] = s;
    sum_sq[b] = s2;
  });
  double s = 0.0, s2 = 0.0;
  for (std::size_t b = 0; b < sum.size(); ++b) {
    s += sum[b];
    s2 += sum_sq[b];
  }
  const double n = static_cast<double>(samples);
  const double mean = s / n;
  const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// Differential entropy (bits) by sampling the mixture and evaluating its
/// exact density. Reproducible for a fixed RngSpec regardless of thread count.
inline EntropyEstimate entropy_mc_estimate(const ScalarMixture& mix, std::int64_t samples, const RngSpec& rng) {
  return detail::mixture_entropy_mc(mix.variances(), mix.probs(), mix.dim(), samples, rng);
}

}  // namespace fhout
