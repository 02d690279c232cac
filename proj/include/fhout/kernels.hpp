#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fhout/error.hpp"
#include "fhout/fair_system.hpp"
#include "fhout/mixture.hpp"
#include "fhout/parallel.hpp"
#include "fhout/rng.hpp"

// Special functions behind the outage-capacity bounds. Throughout, the
// interferer dummies theta are i.i.d. Exp(1) crossover gains, b2 = gamma / v
// and c = v / u.

namespace fhout {

struct KernelEstimate {
  double value = 0.0;
  double error = 0.0;  // quadrature error bound or Monte Carlo standard error
};

namespace detail {

inline constexpr double kQuadTolerance = 1e-8;
inline constexpr double kGammaTailMass = 1e-12;
inline constexpr unsigned kQuadMaxDepth = 15;

// log(k!) for k = 0..kmax.
inline std::vector<double> log_factorials(int kmax) {
  std::vector<double> lf(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (int k = 2; k <= kmax; ++k) lf[static_cast<std::size_t>(k)] = lf[static_cast<std::size_t>(k - 1)] + std::log(k);
  return lf;
}

// Binomial(trials, c) masses computed in the log domain.
inline std::vector<double> binomial_pmf(int trials, double c) {
  std::vector<double> pmf(static_cast<std::size_t>(trials) + 1, 0.0);
  if (c <= 0.0) {
    pmf.front() = 1.0;
    return pmf;
  }
  if (c >= 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const auto lf = log_factorials(trials);
  const double lc = std::log(c), l1c = std::log1p(-c);
  for (int k = 0; k <= trials; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    pmf[ks] = std::exp(lf[static_cast<std::size_t>(trials)] - lf[ks] - lf[static_cast<std::size_t>(trials - k)] +
                       k * lc + (trials - k) * l1c);
  }
  return pmf;
}

// Adaptive Gauss-Kronrod with an absolute tolerance. Boost's tolerance is
// relative to the top-level estimate, so it is rescaled from a one-shot pass.
template <class F>
KernelEstimate integrate(F&& f, double lo, double hi, double abs_tol = kQuadTolerance) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  const double rough = std::abs(Rule::integrate(f, lo, hi, 0));
  const double rel_tol = std::clamp(abs_tol / std::max(rough, 1e-300), 1e-13, 1.0);
  double error = 0.0;
  const double value = Rule::integrate(f, lo, hi, kQuadMaxDepth, rel_tol, &error);
  return {value, error};
}

// Upper integration limit leaving at most kGammaTailMass of Gamma(shape, 1).
inline double gamma_truncation_point(int shape) {
  return boost::math::gamma_q_inv(static_cast<double>(shape), kGammaTailMass);
}

inline void check_kernel_params(int n, double b1, double b2, double c) {
  require(n >= 2, "kernel: n must be >= 2");
  require(std::isfinite(b1) && b1 <= 0.0, "kernel: b1 must be <= 0");
  require(std::isfinite(b2) && b2 > 0.0, "kernel: b2 must be positive");
  require(c >= 0.0 && c <= 1.0, "kernel: c must lie in [0, 1]");
}

}  // namespace detail

/// alpha_n(theta; b, c): binomial average of log2(1 + b(1 - c^B) theta) with
/// B ~ Binomial(n - 1, c), offset by -(n - 1) c log2 c and scaled by
/// 1 / (b theta + 1). Precomputes the binomial weights once per (n, b, c).
class AlphaKernel {
 public:
  AlphaKernel(int n, double b, double c) : b_(b) {
    detail::require(n >= 1, "alpha: n must be >= 1");
    detail::require(std::isfinite(b) && b > 0.0, "alpha: b must be positive");
    detail::require(c >= 0.0 && c <= 1.0, "alpha: c must lie in [0, 1]");
    const auto pmf = detail::binomial_pmf(n - 1, c);
    for (int k = 0; k < n; ++k) {
      const double w = pmf[static_cast<std::size_t>(k)];
      const double spread = 1.0 - std::pow(c, k);
      if (w > 0.0 && spread > 0.0) terms_.push_back({w, spread});
    }
    offset_ = (c > 0.0 && c < 1.0) ? -(n - 1) * c * std::log2(c) : 0.0;
  }

  double operator()(double theta) const {
    double avg = 0.0;
    for (const auto& t : terms_) avg += t.weight * std::log2(1.0 + b_ * t.spread * theta);
    return (avg + offset_) / (b_ * theta + 1.0);
  }

 private:
  struct Term {
    double weight;
    double spread;
  };
  double b_;
  double offset_ = 0.0;
  std::vector<Term> terms_;
};

inline double alpha(int n, double theta, double b, double c) {
  detail::require(theta >= 0.0, "alpha: theta must be >= 0");
  return AlphaKernel(n, b, c)(theta);
}

/// Monte Carlo representation of psi_n for fixed (b2, c): psi_n(b1) =
/// E exp(b1 * K) where K = 2^{-alpha_n(sum theta)} * prod over nonempty
/// subsets S of (b2 theta_S + 1)^{c^|S| (1-c)^{n-1-|S|}}. K does not depend
/// on b1, so a sampler built once can be re-evaluated along a root search
/// with the same draws.
class PsiSampler {
 public:
  static constexpr std::int64_t kBlock = 1 << 13;

  PsiSampler(int n, double b2, double c, std::int64_t samples, const RngSpec& rng) {
    detail::check_kernel_params(n, 0.0, b2, c);
    detail::require(samples >= 2, "psi: need at least two samples");
    const int k = n - 1;
    if (k > kMaxEnumeratedInterferers) throw EnumerationLimit("psi: more than 20 interferers cannot be enumerated");

    std::vector<double> exponent(static_cast<std::size_t>(k) + 1, 0.0);
    for (int m = 1; m <= k; ++m) exponent[static_cast<std::size_t>(m)] = std::pow(c, m) * std::pow(1.0 - c, k - m);
    const AlphaKernel alpha_n(n, b2, c);

    factors_.resize(static_cast<std::size_t>(samples));
    const std::int64_t blocks = (samples + kBlock - 1) / kBlock;
    detail::parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
      Rng gen(rng.child(b));
      const std::uint32_t subsets = 1U << k;
      std::vector<double> theta(static_cast<std::size_t>(k)), sums(subsets, 0.0);
      const std::int64_t begin = static_cast<std::int64_t>(b) * kBlock;
      const std::int64_t end = std::min(samples, begin + kBlock);
      for (std::int64_t i = begin; i < end; ++i) {
        for (double& t : theta) t = gen.exponential();
        double log2k = 0.0;
        for (std::uint32_t mask = 1; mask < subsets; ++mask) {
          sums[mask] = sums[mask & (mask - 1)] + theta[static_cast<std::size_t>(std::countr_zero(mask))];
          const double e = exponent[static_cast<std::size_t>(std::popcount(mask))];
          if (e > 0.0) log2k += e * std::log2(b2 * sums[mask] + 1.0);
        }
        log2k -= alpha_n(sums[subsets - 1]);
        factors_[static_cast<std::size_t>(i)] = std::exp2(log2k);
      }
    });
  }

  KernelEstimate operator()(double b1) const {
    double s = 0.0, s2 = 0.0;
    for (double f : factors_) {
      const double x = std::exp(b1 * f);
      s += x;
      s2 += x * x;
    }
    const double n = static_cast<double>(factors_.size());
    const double mean = s / n;
    const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
    return {mean, std::sqrt(var / n)};
  }

  std::size_t samples() const { return factors_.size(); }

 private:
  std::vector<double> factors_;
};

enum class PsiEstimator { kMonteCarlo, kQuadrature };

struct PsiOptions {
  PsiEstimator estimator = PsiEstimator::kMonteCarlo;
  std::int64_t samples = 200000;
  RngSpec rng{};
};

/// phi_n(b1, b2, c1, c2) = E exp(b1 (b2 J + 1)^{c1} 2^{-alpha_n(J; b2, c2)})
/// with J ~ Gamma(n - 1, 1), by adaptive Gauss-Kronrod on the range holding
/// all but 1e-12 of the Gamma mass. The integrand is bounded by the Gamma
/// density, so the dropped tail is at most 1e-12 and is added to the error.
inline KernelEstimate phi_estimate(int n, double b1, double b2, double c1, double c2) {
  detail::check_kernel_params(n, b1, b2, c2);
  detail::require(c1 >= 0.0 && c1 <= 1.0, "phi: c1 must lie in [0, 1]");
  if (b1 == 0.0) return {1.0, 0.0};
  const AlphaKernel alpha_n(n, b2, c2);
  const int shape = n - 1;
  const double log_norm = detail::log_factorials(shape - 1).back();
  auto integrand = [&](double theta) {
    const double log_density = (shape == 1 ? 0.0 : (shape - 1) * std::log(theta)) - theta - log_norm;
    const double k = std::pow(b2 * theta + 1.0, c1) * std::exp2(-alpha_n(theta));
    return std::exp(log_density + b1 * k);
  };
  auto r = detail::integrate(integrand, 0.0, detail::gamma_truncation_point(shape));
  r.error += detail::kGammaTailMass;
  return r;
}

inline double phi(int n, double b1, double b2, double c1, double c2) { return phi_estimate(n, b1, b2, c1, c2).value; }

namespace detail {

// psi_3 as a 2-D integral: s = theta_1 + theta_2 ~ Gamma(2, 1) and
// theta_1 = s w with w ~ U(0, 1) independent of s.
inline KernelEstimate psi3_quadrature(double b1, double b2, double c) {
  const AlphaKernel alpha3(3, b2, c);
  const double pair_exp = c * (1.0 - c), full_exp = c * c;
  double inner_error = 0.0;
  auto outer = [&](double s) {
    const double common = std::exp2(-alpha3(s)) * std::pow(b2 * s + 1.0, full_exp);
    auto inner = [&](double w) {
      const double pair = (b2 * s * w + 1.0) * (b2 * s * (1.0 - w) + 1.0);
      return std::exp(b1 * common * std::pow(pair, pair_exp));
    };
    // Symmetric in w <-> 1 - w.
    auto r = integrate(inner, 0.0, 0.5, kQuadTolerance * 0.1);
    inner_error = std::max(inner_error, 2.0 * r.error);
    return s * std::exp(-s) * 2.0 * r.value;
  };
  auto r = integrate(outer, 0.0, gamma_truncation_point(2));
  r.error += inner_error + kGammaTailMass;
  return r;
}

}  // namespace detail

/// psi_n(b1, b2, c). Quadrature is available for n <= 3; Monte Carlo works
/// for any n up to the enumeration cap.
inline KernelEstimate psi(int n, double b1, double b2, double c, const PsiOptions& opts = {}) {
  detail::check_kernel_params(n, b1, b2, c);
  if (opts.estimator == PsiEstimator::kQuadrature) {
    detail::require(n <= 3, "psi: quadrature estimator supports n <= 3 only");
    if (b1 == 0.0) return {1.0, 0.0};
    // For n = 2 the single subset exponent is c, so psi_2 is phi_2 with c1 = c.
    if (n == 2) return phi_estimate(2, b1, b2, c, c);
    return detail::psi3_quadrature(b1, b2, c);
  }
  return PsiSampler(n, b2, c, opts.samples, opts.rng)(b1);
}

/// f(v, n, gamma) = 2^{H(v,n)} ((n - 1) gamma / v + 1)^{1 - a(v,n)}: the
/// per-user-count penalty in the small-outage expansion.
inline double f_factor(int v, int u, int n, double gamma) {
  detail::require(gamma > 0.0, "f_factor: gamma must be positive");
  return std::exp2(h_fair(v, u, n)) * std::pow((n - 1) * gamma / v + 1.0, 1.0 - a_zero(v, u, n));
}

/// kappa_v of the high-SNR expansion; requires n_max >= 2.
inline double kappa(int v, int u, int n_max) {
  detail::require(n_max >= 2, "kappa: n_max must be >= 2");
  const double exponent = a_zero(v, u, n_max) - 1.0;
  return std::exp2(-h_fair(v, u, n_max)) / v * std::pow(static_cast<double>(n_max - 1) / v, exponent);
}

}  // namespace fhout
