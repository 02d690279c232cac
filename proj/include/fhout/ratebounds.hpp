#pragma once

#include <cmath>

#include "fhout/fair_system.hpp"
#include "fhout/kernels.hpp"
#include "fhout/mixture.hpp"
#include "fhout/model.hpp"

// Achievable-rate lower bounds (bits per transmission) for the reference user
// under one channel realization. The largest interference level is
// c_L gamma = (gamma / v) J for hopping and (gamma / u) J after full-band
// spreading, with J the sum of crossover gains.

namespace fhout {

struct FairSystemStats {
  double h_fair = 0.0;  // collision-pattern entropy, bits
  double a_zero = 1.0;  // probability of an interference-free sub-band
  double g_lb = 0.0;    // order-free lower bound on the mixing gain, bits
};

/// Mixing-gain lower bound that depends on the crossover gains only through
/// their sum J.
inline double g_lb(int v, int u, int n, double J, double gamma) {
  detail::require(J >= 0.0, "g_lb: J must be >= 0");
  detail::require(gamma > 0.0, "g_lb: gamma must be positive");
  if (n == 1) return 0.0;
  return AlphaKernel(n, gamma / v, static_cast<double>(v) / u)(J);
}

inline FairSystemStats fair_system_stats(int v, int u, int n, double J, double gamma) {
  return {h_fair(v, u, n), a_zero(v, u, n), g_lb(v, u, n, J, gamma)};
}

namespace detail {

// log2(1 + 2^x) without overflow.
inline double log2_1p_exp2(double x) {
  if (x > 60.0) return x + std::log2(1.0 + std::exp2(-x));
  return std::log2(1.0 + std::exp2(x));
}

// v log2(2^{log2_snr} + 1) where log2_snr already folds in every factor.
inline double hopping_rate(int v, double log2_snr) { return v * log2_1p_exp2(log2_snr); }

}  // namespace detail

/// Tightest bound: keeps the full interference mixture (all 2^(n-1)
/// collision patterns) in the denominator.
inline double rate_lb1(const ChannelDraw& draw, const NetworkConfig& cfg) {
  const auto mix = build_mixture(draw, cfg);
  double log2_noise = 0.0;
  for (std::size_t l = 0; l < mix.size(); ++l) log2_noise += mix.probs[l] * std::log2(mix.levels[l] * cfg.gamma + 1.0);
  const auto st = fair_system_stats(cfg.v, cfg.u, draw.n(), draw.interference_sum(), cfg.gamma);
  const double log2_snr = -st.h_fair + st.g_lb + std::log2(draw.direct * cfg.gamma / cfg.v) - log2_noise;
  return detail::hopping_rate(cfg.v, log2_snr);
}

/// Looser bound: every interference level replaced by the largest one.
inline double rate_lb2(const ChannelDraw& draw, const NetworkConfig& cfg) {
  cfg.validate();
  const double J = draw.interference_sum();
  const auto st = fair_system_stats(cfg.v, cfg.u, draw.n(), J, cfg.gamma);
  const double log2_noise = (1.0 - st.a_zero) * std::log2(cfg.gamma / cfg.v * J + 1.0);
  const double log2_snr = -st.h_fair + st.g_lb + std::log2(draw.direct * cfg.gamma / cfg.v) - log2_noise;
  return detail::hopping_rate(cfg.v, log2_snr);
}

/// Exact rate when every user spreads over all u sub-bands (independent of v).
inline double rate_fbs(const ChannelDraw& draw, const NetworkConfig& cfg) {
  cfg.validate();
  const double sinr = draw.direct * cfg.gamma / (cfg.u * (1.0 + cfg.gamma / cfg.u * draw.interference_sum()));
  return cfg.u * std::log2(1.0 + sinr);
}

/// Bound obtained by treating the interference as Gaussian of equal power.
inline double rate_gaussian(const ChannelDraw& draw, const NetworkConfig& cfg) {
  cfg.validate();
  const double sinr = draw.direct * cfg.gamma / (cfg.v * (1.0 + cfg.gamma / cfg.u * draw.interference_sum()));
  return cfg.v * std::log2(1.0 + sinr);
}

/// Interference-free rate of one FD licensee holding u / n_des sub-bands.
inline double rate_fd(const ChannelDraw& draw, const NetworkConfig& cfg) {
  cfg.validate_fd();
  const double width = static_cast<double>(cfg.u) / cfg.n_des;
  return width * std::log2(1.0 + draw.direct * cfg.gamma / width);
}

}  // namespace fhout
