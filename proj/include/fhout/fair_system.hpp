#pragma once

#include <cmath>

#include "fhout/error.hpp"

// Quantities of a fair hopping system (every user hops over v of u sub-bands)
// that depend only on (v, u, n).

namespace fhout {

/// Binary entropy in bits; zero at the endpoints.
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

/// Entropy (bits) of the collision pattern seen on one sub-band when n users
/// are active: (n - 1) * h_b(v/u).
inline double h_fair(int v, int u, int n) {
  detail::require(u >= 1 && v >= 1 && v <= u, "h_fair: need 1 <= v <= u");
  detail::require(n >= 1, "h_fair: need n >= 1");
  return (n - 1) * binary_entropy(static_cast<double>(v) / u);
}

/// Probability that a sub-band is free of interference: (1 - v/u)^(n-1).
inline double a_zero(int v, int u, int n) {
  detail::require(u >= 1 && v >= 1 && v <= u, "a_zero: need 1 <= v <= u");
  detail::require(n >= 1, "a_zero: need n >= 1");
  if (n == 1) return 1.0;
  return std::pow(1.0 - static_cast<double>(v) / u, n - 1);
}

}  // namespace fhout
