#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "fhout/error.hpp"
#include "fhout/fair_system.hpp"
#include "fhout/kernels.hpp"
#include "fhout/model.hpp"
#include "fhout/parallel.hpp"

// epsilon-outage capacities. Every solver returns
//   sup { R : Pr{rate < R} < epsilon } = sup { R : survival(R) > 1 - epsilon }
// for a survival function that is continuous and strictly decreasing in R.

namespace fhout {

/// Which hopping lower bound a survival function comes from, tightest first.
enum class FhBound {
  kFullMixture = 1,  // all collision patterns; needs psi_n
  kPeakLevel = 2,    // largest interference level only; needs phi_n
  kClosedForm = 3,   // Jensen relaxation of kPeakLevel; no integration
};

enum class Solver { kFh1, kFh2, kFh3, kFd, kFbs };

inline Solver solver_for(FhBound bound) {
  switch (bound) {
    case FhBound::kFullMixture: return Solver::kFh1;
    case FhBound::kPeakLevel: return Solver::kFh2;
    case FhBound::kClosedForm: return Solver::kFh3;
  }
  return Solver::kFh3;
}

inline std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::kFh1: return "FH1";
    case Solver::kFh2: return "FH2";
    case Solver::kFh3: return "FH3";
    case Solver::kFd: return "FD";
    case Solver::kFbs: return "FBS";
  }
  return "?";
}

struct OutageQuery {
  double epsilon = 0.1;
  NetworkConfig cfg;
  UserCountPmf pmf = UserCountPmf::degenerate(1);

  void validate() const {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "OutageQuery: epsilon must lie in (0, 1)");
    cfg.validate();
  }

  /// Outage targets at or above the smallest user-count mass are accepted
  /// but flagged.
  bool epsilon_above_recommended() const { return epsilon >= pmf.min_positive(); }
};

struct OutageResult {
  double rate = 0.0;  // bits per transmission; lower end of the final bracket
  Solver solver = Solver::kFh3;
  int v_used = 0;
  int iterations = 0;
  double residual = 0.0;        // final bracket width
  double rate_std_error = 0.0;  // Monte Carlo error propagated to the rate (psi_n only)
  bool epsilon_above_recommended = false;
};

struct SolverOptions {
  double tolerance = 1e-6;  // bits
  int max_iterations = 200;
  PsiOptions psi{};
};

namespace detail {

struct SupBracket {
  double lo = 0.0;
  double hi = 0.0;
  int iterations = 0;
};

// Bisection for sup { R >= 0 : survival(R) > threshold } on a decreasing
// survival with survival(0) > threshold. The upper end doubles from 1 until
// it leaves the set. Width is driven below tol * min(1, hi), floored at
// 1e-12 * tol so vanishing capacities still terminate.
template <class Survival>
SupBracket sup_above(Survival&& survival, double threshold, double tol, int max_iterations) {
  SupBracket b{0.0, 1.0, 0};
  while (survival(b.hi) > threshold) {
    b.lo = b.hi;
    b.hi *= 2.0;
    if (++b.iterations > max_iterations) throw NonConvergence("outage solver: could not bracket the capacity");
  }
  auto done = [&] { return b.hi - b.lo <= tol * std::clamp(b.hi, 1e-6, 1.0); };
  while (!done()) {
    const double mid = 0.5 * (b.lo + b.hi);
    if (survival(mid) > threshold) {
      b.lo = mid;
    } else {
      b.hi = mid;
    }
    if (++b.iterations > max_iterations) throw NonConvergence("outage solver: bisection did not converge");
  }
  return b;
}

// (1 - 2^{R/v}) v / gamma, accurate for small R.
inline double scaled_rate_penalty(double R, int v, double gamma) {
  return -std::expm1(R * std::numbers::ln2 / v) * v / gamma;
}

}  // namespace detail

/// Closed-form survival of the Jensen-relaxed hopping bound.
inline double survival_fh3(double R, int v, const OutageQuery& query) {
  detail::require(R >= 0.0, "survival_fh3: R must be >= 0");
  const NetworkConfig cfg = query.cfg.with_v(v);
  cfg.validate();
  const double base = detail::scaled_rate_penalty(R, v, cfg.gamma);
  const double b2 = cfg.gamma / v;
  double s = 0.0;
  for (int n = 1; n <= query.pmf.n_max(); ++n) {
    const double q = query.pmf.q(n);
    if (q == 0.0) continue;
    const double b1 = std::exp2(h_fair(v, cfg.u, n)) * base;
    s += q * std::exp(b1 * std::pow((n - 1) * b2 + 1.0, 1.0 - a_zero(v, cfg.u, n)));
  }
  return s;
}

/// Survival of the full-band-spreading rate (exact law).
inline double survival_fbs(double R, const OutageQuery& query) {
  detail::require(R >= 0.0, "survival_fbs: R must be >= 0");
  const int u = query.cfg.u;
  double tail = 0.0;
  for (int n = 1; n <= query.pmf.n_max(); ++n) tail += query.pmf.q(n) * std::exp2(-(n - 1) * R / u);
  return std::exp(detail::scaled_rate_penalty(R, u, query.cfg.gamma)) * tail;
}

/// Survival curve of one hopping bound at fixed (cfg, v, pmf). Construction
/// does all epsilon-independent work (psi_n samplers in particular), so one
/// curve serves a whole epsilon sweep. Monte Carlo draws are keyed by
/// (v, n), making the curve a deterministic function of R.
class FhOutageCurve {
 public:
  FhOutageCurve(const NetworkConfig& cfg, UserCountPmf pmf, FhBound bound, SolverOptions opts = {})
      : cfg_(cfg), pmf_(std::move(pmf)), bound_(bound), opts_(opts) {
    cfg_.validate();
    detail::require(opts_.tolerance > 0.0, "FhOutageCurve: tolerance must be positive");
    if (bound_ == FhBound::kFullMixture && opts_.psi.estimator == PsiEstimator::kMonteCarlo) {
      samplers_.resize(static_cast<std::size_t>(pmf_.n_max()) + 1);
      const double b2 = cfg_.gamma / cfg_.v;
      for (int n = 2; n <= pmf_.n_max(); ++n) {
        if (pmf_.q(n) == 0.0) continue;
        const RngSpec stream = opts_.psi.rng.child(static_cast<std::uint64_t>(cfg_.v) * 4096U + static_cast<std::uint64_t>(n));
        samplers_[static_cast<std::size_t>(n)] =
            std::make_shared<const PsiSampler>(n, b2, cfg_.hop_fraction(), opts_.psi.samples, stream);
      }
    }
  }

  const NetworkConfig& config() const { return cfg_; }
  FhBound bound() const { return bound_; }

  double survival(double R) const { return evaluate(R).value; }

  /// Survival with its accumulated numerical error (MC standard error or
  /// quadrature error bound).
  KernelEstimate evaluate(double R) const {
    detail::require(R >= 0.0, "FhOutageCurve: R must be >= 0");
    const int v = cfg_.v;
    const double base = detail::scaled_rate_penalty(R, v, cfg_.gamma);
    const double b2 = cfg_.gamma / v;
    const double c = cfg_.hop_fraction();
    KernelEstimate total{pmf_.q(1) * std::exp(base), 0.0};
    double mc_var = 0.0;
    for (int n = 2; n <= pmf_.n_max(); ++n) {
      const double q = pmf_.q(n);
      if (q == 0.0) continue;
      const double b1 = std::exp2(h_fair(v, cfg_.u, n)) * base;
      const double c1 = 1.0 - a_zero(v, cfg_.u, n);
      KernelEstimate term;
      switch (bound_) {
        case FhBound::kClosedForm:
          term = {std::exp(b1 * std::pow((n - 1) * b2 + 1.0, c1)), 0.0};
          break;
        case FhBound::kPeakLevel:
          term = phi_estimate(n, b1, b2, c1, c);
          break;
        case FhBound::kFullMixture:
          if (opts_.psi.estimator == PsiEstimator::kMonteCarlo) {
            term = (*samplers_[static_cast<std::size_t>(n)])(b1);
            mc_var += q * q * term.error * term.error;
            term.error = 0.0;
          } else {
            term = psi(n, b1, b2, c, opts_.psi);
          }
          break;
      }
      total.value += q * term.value;
      total.error += q * term.error;
    }
    total.error += std::sqrt(mc_var);
    return total;
  }

  OutageResult capacity(double epsilon) const {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "outage_capacity_fh: epsilon must lie in (0, 1)");
    const double threshold = 1.0 - epsilon;
    const auto b = detail::sup_above([&](double R) { return survival(R); }, threshold, opts_.tolerance,
                                     opts_.max_iterations);
    OutageResult r;
    r.rate = b.lo;
    r.solver = solver_for(bound_);
    r.v_used = cfg_.v;
    r.iterations = b.iterations;
    r.residual = b.hi - b.lo;
    r.epsilon_above_recommended = epsilon >= pmf_.min_positive();
    if (bound_ == FhBound::kFullMixture && opts_.psi.estimator == PsiEstimator::kMonteCarlo && b.lo > 0.0)
      r.rate_std_error = rate_error(b.lo);
    return r;
  }

  /// Numerical error of the survival at R divided by the survival slope:
  /// the induced uncertainty in a capacity located at R.
  double rate_error(double R) const {
    const double h = std::max(1e-9, 1e-4 * R);
    const double slope = (survival(std::max(0.0, R - h)) - survival(R + h)) / (R + h - std::max(0.0, R - h));
    if (!(slope > 0.0)) return 0.0;
    return evaluate(R).error / slope;
  }

 private:
  NetworkConfig cfg_;
  UserCountPmf pmf_;
  FhBound bound_;
  SolverOptions opts_;
  std::vector<std::shared_ptr<const PsiSampler>> samplers_;
};

/// Lower bound on the hopping outage capacity with v sub-bands per user.
inline OutageResult outage_capacity_fh(const OutageQuery& query, FhBound bound, int v, const SolverOptions& opts = {}) {
  query.validate();
  return FhOutageCurve(query.cfg.with_v(v), query.pmf, bound, opts).capacity(query.epsilon);
}

inline OutageResult outage_capacity_fh(const OutageQuery& query, FhBound bound, const SolverOptions& opts = {}) {
  return outage_capacity_fh(query, bound, query.cfg.v, opts);
}

struct BestV {
  int v_opt = 1;
  OutageResult result;
  std::vector<OutageResult> per_v;  // index v - 1
};

/// Exhaustive scan over v = 1..u; ties go to the smaller v.
inline BestV best_v(const OutageQuery& query, FhBound bound, const SolverOptions& opts = {}) {
  query.validate();
  BestV best;
  best.per_v.resize(static_cast<std::size_t>(query.cfg.u));
  detail::parallel_for(best.per_v.size(), [&](std::size_t i) {
    best.per_v[i] = outage_capacity_fh(query, bound, static_cast<int>(i) + 1, opts);
  });
  best.result = best.per_v.front();
  for (const auto& r : best.per_v) {
    if (r.rate > best.result.rate) best.result = r;
  }
  best.v_opt = best.result.v_used;
  return best;
}

/// Frequency division: each active user owns u / n_des interference-free
/// sub-bands. epsilon = 0 gives zero.
inline OutageResult outage_capacity_fd(const OutageQuery& query) {
  query.cfg.validate_fd();
  detail::require(query.epsilon >= 0.0 && query.epsilon < 1.0, "outage_capacity_fd: epsilon must lie in [0, 1)");
  const double width = static_cast<double>(query.cfg.u) / query.cfg.n_des;
  OutageResult r;
  r.rate = width * std::log2(1.0 - query.cfg.gamma / width * std::log1p(-query.epsilon));
  r.solver = Solver::kFd;
  r.v_used = static_cast<int>(width);
  r.epsilon_above_recommended = query.epsilon > 0.0 && query.epsilon_above_recommended();
  return r;
}

inline OutageResult outage_capacity_fbs(const OutageQuery& query, const SolverOptions& opts = {}) {
  query.validate();
  const auto b = detail::sup_above([&](double R) { return survival_fbs(R, query); }, 1.0 - query.epsilon,
                                   opts.tolerance, opts.max_iterations);
  OutageResult r;
  r.rate = b.lo;
  r.solver = Solver::kFbs;
  r.v_used = query.cfg.u;
  r.iterations = b.iterations;
  r.residual = b.hi - b.lo;
  r.epsilon_above_recommended = query.epsilon_above_recommended();
  return r;
}

// ---------------------------------------------------------------------------
// Asymptotic forms

/// Small-epsilon expansion of the closed-form hopping bound.
inline double asymptotic_fh3_small_eps(int v, const OutageQuery& query) {
  query.cfg.with_v(v).validate();
  double g = 0.0;
  for (int n = 1; n <= query.pmf.n_max(); ++n) g += query.pmf.q(n) * f_factor(v, query.cfg.u, n, query.cfg.gamma);
  return query.epsilon * query.cfg.gamma / (g * std::numbers::ln2);
}

/// g(u) - g(1) of the small-epsilon expansion, using
/// 2^{H(1,n)} = (u / (u-1)^{1-1/u})^{n-1}. Positive when v = 1 beats v = u.
inline double small_eps_v1_margin(int u, double gamma, const UserCountPmf& pmf) {
  detail::require(u >= 2, "small_eps_v1_condition: u must be >= 2");
  detail::require(gamma > 0.0, "small_eps_v1_condition: gamma must be positive");
  const double base = u / std::pow(u - 1.0, 1.0 - 1.0 / u);
  double g1 = 0.0;
  for (int n = 1; n <= pmf.n_max(); ++n) {
    const double exponent = 1.0 - std::pow(1.0 - 1.0 / u, n - 1);
    g1 += pmf.q(n) * std::pow(base, n - 1) * std::pow((n - 1) * gamma + 1.0, exponent);
  }
  const double gu = 1.0 + (pmf.mean() - 1.0) / u * gamma;
  return gu - g1;
}

inline bool small_eps_v1_condition(int u, double gamma, const UserCountPmf& pmf) {
  return small_eps_v1_margin(u, gamma, pmf) > 0.0;
}

/// Smallest SNR above which v = 1 wins at small epsilon, by bisection on
/// log(gamma) over [gamma_lo, gamma_hi]. Assumes one sign change there.
inline double v1_threshold_gamma(int u, const UserCountPmf& pmf, double gamma_lo = 1e-6, double gamma_hi = 1e8,
                                 double rel_tol = 1e-12) {
  detail::require(!small_eps_v1_condition(u, gamma_lo, pmf), "v1_threshold_gamma: condition already holds at gamma_lo");
  detail::require(small_eps_v1_condition(u, gamma_hi, pmf), "v1_threshold_gamma: condition never holds below gamma_hi");
  double lo = std::log(gamma_lo), hi = std::log(gamma_hi);
  for (int it = 0; it < 200 && hi - lo > rel_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (small_eps_v1_condition(u, std::exp(mid), pmf) ? hi : lo) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

/// Below this SNR the high-SNR form falls back to the exact closed-form solver.
inline constexpr double kHighSnrThreshold = 1e3;

/// High-SNR form of the closed-form hopping bound, driven by the largest
/// user count. Requires n_max >= 2 and epsilon < q_{n_max}.
inline double asymptotic_fh3_high_snr(int v, const OutageQuery& query, const SolverOptions& opts = {}) {
  query.validate();
  const int n_max = query.pmf.n_max();
  const double q_top = query.pmf.q(n_max);
  detail::require(n_max >= 2, "asymptotic_fh3_high_snr: needs n_max >= 2");
  detail::require(query.epsilon < q_top, "asymptotic_fh3_high_snr: needs epsilon < q_{n_max}");
  if (query.cfg.gamma < kHighSnrThreshold) return outage_capacity_fh(query, FhBound::kClosedForm, v, opts).rate;
  const int u = query.cfg.u;
  const double growth = std::pow(query.cfg.gamma, a_zero(v, u, n_max));
  return v * std::log2(1.0 - kappa(v, u, n_max) * growth * std::log1p(-query.epsilon / q_top));
}

/// argmax over integer v of v (1 - v/u)^{n_max - 1}: the SNR -> infinity
/// optimum. Equals ceil(u / n_max) when n_max divides u.
inline int high_snr_v_opt_limit(int u, int n_max) {
  detail::require(u >= 1 && n_max >= 1, "high_snr_v_opt_limit: need u, n_max >= 1");
  int best = 1;
  double best_score = -1.0;
  for (int v = 1; v <= u; ++v) {
    const double score = v * std::pow(1.0 - static_cast<double>(v) / u, n_max - 1);
    if (score > best_score) {
      best = v;
      best_score = score;
    }
  }
  return best;
}

/// argmax over v of the high-SNR form at the query's finite SNR.
inline int high_snr_v_opt(const OutageQuery& query) {
  int best = 1;
  double best_rate = -1.0;
  for (int v = 1; v <= query.cfg.u; ++v) {
    const double r = asymptotic_fh3_high_snr(v, query);
    if (r > best_rate) {
      best = v;
      best_rate = r;
    }
  }
  return best;
}

/// Sufficient condition for hopping to beat FD as SNR -> infinity.
inline bool fh_beats_fd_high_snr(int n_des, int n_max) {
  detail::require(n_des >= 1 && n_max >= 1, "fh_beats_fd_high_snr: need positive counts");
  return n_des >= std::numbers::e * n_max;
}

struct Example2Design {
  double lambda = 0.0;       // mean number of other active users
  int n_star = 1;            // user count the hopping design is tuned for
  double p_threshold = 0.0;  // activity probability below which hopping wins
  bool sufficient = false;
};

/// n_des = n_max licensees, each active independently with probability
/// p_active; the other active users are approximately Poisson(p n_max).
inline Example2Design example2_design(int u, int n_des, double p_active, double epsilon) {
  detail::require(u >= 1 && n_des >= 1 && u % n_des == 0, "example2_design: n_des must divide u");
  detail::require(p_active > 0.0 && p_active <= 1.0, "example2_design: p_active must lie in (0, 1]");
  detail::require(epsilon > 0.0 && epsilon < 1.0, "example2_design: epsilon must lie in (0, 1)");
  Example2Design d;
  d.lambda = p_active * n_des;
  d.n_star = std::max(1, static_cast<int>(std::ceil(-d.lambda * std::log(epsilon))));
  d.p_threshold = -1.0 / (std::numbers::e * std::log(epsilon));
  d.sufficient = p_active < d.p_threshold;
  return d;
}

struct PoissonTailCheck {
  int n_star = 1;
  double exact_tail = 0.0;      // Pr{Poisson(lambda) >= n_star}
  double chained_bound = 0.0;   // geometric-series + Stirling bound on the same tail
  bool bound_ok = false;        // exact_tail <= epsilon / 2
  bool condition_holds = false; // lambda (ln(-ln eps) - 1) >= 1
};

/// Pr{Poisson(lambda) >= n} by direct summation of the upper tail.
inline double poisson_upper_tail(double lambda, int n) {
  detail::require(lambda > 0.0 && n >= 0, "poisson_upper_tail: need lambda > 0 and n >= 0");
  double log_term = -lambda + n * std::log(lambda) - detail::log_factorials(n).back();
  double term = std::exp(log_term);
  double sum = 0.0;
  for (int k = n;; ++k) {
    sum += term;
    term *= lambda / (k + 1);
    if (k + 1 > lambda && term <= 1e-17 * sum) break;
    if (term == 0.0) break;
  }
  return std::min(1.0, sum);
}

inline PoissonTailCheck poisson_tail_bound_check(double lambda, double epsilon) {
  detail::require(lambda > 0.0, "poisson_tail_bound_check: lambda must be positive");
  detail::require(epsilon > 0.0 && epsilon < 1.0, "poisson_tail_bound_check: epsilon must lie in (0, 1)");
  PoissonTailCheck c;
  const double log_eps = std::log(epsilon);
  c.n_star = std::max(1, static_cast<int>(std::ceil(-lambda * log_eps)));
  c.exact_tail = poisson_upper_tail(lambda, c.n_star);
  c.bound_ok = c.exact_tail <= epsilon / 2.0;
  const double ns = c.n_star;
  c.chained_bound = std::exp(-lambda) / std::sqrt(2.0 * std::numbers::pi * ns) *
                    std::pow(lambda * std::numbers::e / ns, ns) / (1.0 - lambda / ns);
  c.condition_holds = epsilon < 1.0 / std::numbers::e && lambda * (std::log(-log_eps) - 1.0) >= 1.0;
  return c;
}

}  // namespace fhout
