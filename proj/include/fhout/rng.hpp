#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fhout {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Identifies one reproducible random stream. Distinct `stream` values under
/// the same seed give statistically independent sequences; `child()` derives
/// sub-streams so parallel workers never share state.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngSpec child(std::uint64_t index) const {
    return {seed, detail::splitmix64(stream ^ detail::splitmix64(index + 0x632be59bd9b4e019ULL))};
  }

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

/// Engine bound to one RngSpec. Not shared across threads.
class Rng {
 public:
  explicit Rng(const RngSpec& spec) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(spec.stream), static_cast<std::uint32_t>(spec.stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on (0, 1].
  double uniform() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  /// Exp(1), strictly positive except with probability 2^-53.
  double exponential() { return -std::log(uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fhout
