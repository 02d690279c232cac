#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fhout/capacity.hpp"
#include "fhout/kernels.hpp"
#include "fhout/model.hpp"

namespace fhout::cli {

enum class Command { kCapacity, kSweepEps, kSweepV, kSweepSnr, kCompare, kValidate };

std::optional<Command> parse_command(std::string_view name);

struct RunSpec {
  Command command = Command::kCapacity;
  std::string config_path;
  std::string output_path = "-";  // "-" writes to stdout
  std::uint64_t seed = 1;
  std::int64_t samples = 1000000;  // Monte Carlo draws for `validate`
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitValidation = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parsed `key=value` configuration. SNRs are stored in dB exactly as given;
/// conversion to linear happens once, in the accessors below.
struct RunConfig {
  int u = 0;
  std::optional<int> v;  // unset: maximize over v
  std::optional<double> gamma_db;
  std::optional<UserCountPmf> pmf;
  std::optional<int> n_des;  // defaults to u
  double eps = 0.1;
  double eps_min = 0.01;
  double eps_max = 0.2;
  int eps_steps = 20;
  double gamma_db_min = -10.0;
  double gamma_db_max = 40.0;
  int gamma_db_steps = 11;
  FhBound bound = FhBound::kFullMixture;
  std::int64_t psi_samples = 200000;
  PsiEstimator psi_estimator = PsiEstimator::kMonteCarlo;

  NetworkConfig network(double gamma_db_value) const;
  NetworkConfig network() const;
  OutageQuery query(double epsilon, double gamma_db_value) const;
  OutageQuery query(double epsilon) const;
};

/// Throws ConfigError on unknown keys, malformed values, or missing
/// required keys (u, q or poisson_lambda).
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Runs one command and writes its CSV. Returns an exit code; diagnostics go
/// to `diag`.
int run(const RunSpec& spec, std::ostream& diag);

/// Same, with the configuration already parsed and an explicit output stream.
int run(Command command, const RunConfig& config, std::uint64_t seed, std::int64_t samples, std::ostream& out,
        std::ostream& diag);

}  // namespace fhout::cli
