#pragma once

#include <stdexcept>
#include <string>

namespace fhout {

// Root-finder exhausted its iteration budget without bracketing or closing the gap.
struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Subset enumeration over interferers would exceed the supported size.
struct EnumerationLimit : std::length_error {
  explicit EnumerationLimit(const std::string& what) : std::length_error(what) {}
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace detail
}  // namespace fhout
