#include "commands.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "fhout/capacity.hpp"
#include "fhout/error.hpp"
#include "fhout/mcsim.hpp"
#include "fhout/parallel.hpp"

namespace fhout::cli {

std::optional<Command> parse_command(std::string_view name) {
  static const std::map<std::string_view, Command> names{
      {"capacity", Command::kCapacity}, {"sweep-eps", Command::kSweepEps}, {"sweep-v", Command::kSweepV},
      {"sweep-snr", Command::kSweepSnr}, {"compare", Command::kCompare},   {"validate", Command::kValidate},
  };
  const auto it = names.find(name);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value for '" + key + "': '" + text + "'");
  return value;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
  return out;
}

std::string format(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// Comma-joined row of already formatted cells.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double x) { return format(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::int64_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(bool b) { return b ? "1" : "0"; }

  std::ostream& out_;
};

std::vector<double> linspace(double lo, double hi, int steps) {
  std::vector<double> xs(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) xs[static_cast<std::size_t>(i)] = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
  return xs;
}

SolverOptions solver_options(const RunConfig& c, std::uint64_t seed) {
  SolverOptions o;
  o.psi.estimator = c.psi_estimator;
  o.psi.samples = c.psi_samples;
  o.psi.rng = RngSpec{seed, 1};
  return o;
}

// Hopping curves for every candidate v: the configured v, or 1..u.
class FhFamily {
 public:
  FhFamily(const RunConfig& c, const NetworkConfig& net, FhBound bound, const SolverOptions& opts) {
    std::vector<int> vs;
    if (c.v) {
      vs.push_back(*c.v);
    } else {
      for (int v = 1; v <= net.u; ++v) vs.push_back(v);
    }
    curves_.resize(vs.size());
    detail::parallel_for(vs.size(), [&](std::size_t i) { curves_[i].emplace(net.with_v(vs[i]), *c.pmf, bound, opts); });
  }

  // Best over v; ties go to the smaller v.
  OutageResult best(double eps) const {
    std::optional<OutageResult> best;
    for (const auto& curve : curves_) {
      const auto r = curve->capacity(eps);
      if (!best || r.rate > best->rate) best = r;
    }
    return *best;
  }

  const std::vector<std::optional<FhOutageCurve>>& curves() const { return curves_; }

 private:
  std::vector<std::optional<FhOutageCurve>> curves_;
};

std::string fh_label(FhBound b) { return "R_fh" + std::to_string(static_cast<int>(b)); }

bool fd_defined(const NetworkConfig& net) { return net.n_des >= 1 && net.u % net.n_des == 0; }

void require_gamma(const RunConfig& c) {
  if (!c.gamma_db) throw ConfigError("config: this command needs gamma_db");
}

void cmd_capacity(const RunConfig& c, const SolverOptions& opts, CsvWriter& csv) {
  require_gamma(c);
  const OutageQuery q = c.query(c.eps);
  q.validate();
  csv.row("scheme", "v", "rate", "iterations", "residual", "rate_std_error", "eps_above_recommended");
  auto emit = [&](const OutageResult& r) {
    csv.row(to_string(r.solver), r.v_used, r.rate, r.iterations, r.residual, r.rate_std_error,
            r.epsilon_above_recommended);
  };
  emit(FhFamily(c, q.cfg, c.bound, opts).best(c.eps));
  if (fd_defined(q.cfg)) emit(outage_capacity_fd(q));
  emit(outage_capacity_fbs(q, opts));
}

void cmd_sweep_eps(const RunConfig& c, const SolverOptions& opts, CsvWriter& csv) {
  require_gamma(c);
  const NetworkConfig net = c.network();
  const auto eps = linspace(c.eps_min, c.eps_max, c.eps_steps);
  std::vector<std::optional<FhFamily>> families(3);
  for (int b = 1; b <= 3; ++b) families[static_cast<std::size_t>(b - 1)].emplace(c, net, static_cast<FhBound>(b), opts);
  std::vector<std::array<OutageResult, 3>> rows(eps.size());
  detail::parallel_for(eps.size(), [&](std::size_t i) {
    for (std::size_t b = 0; b < 3; ++b) rows[i][b] = families[b]->best(eps[i]);
  });
  csv.row("eps", "R_fh1", "v_fh1", "R_fh2", "v_fh2", "R_fh3", "v_fh3");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto& r = rows[i];
    csv.row(eps[i], r[0].rate, r[0].v_used, r[1].rate, r[1].v_used, r[2].rate, r[2].v_used);
  }
}

void cmd_sweep_v(const RunConfig& c, const SolverOptions& opts, CsvWriter& csv) {
  require_gamma(c);
  const OutageQuery q = c.query(c.eps);
  q.validate();
  const auto best = best_v(q, c.bound, opts);
  csv.row("v", fh_label(c.bound), "is_opt");
  for (const auto& r : best.per_v) csv.row(r.v_used, r.rate, r.v_used == best.v_opt);
}

void cmd_sweep_snr(const RunConfig& c, const SolverOptions& opts, CsvWriter& csv) {
  const auto dbs = linspace(c.gamma_db_min, c.gamma_db_max, c.gamma_db_steps);
  struct Row {
    OutageResult fh, fbs;
    std::optional<OutageResult> fd;
  };
  std::vector<Row> rows(dbs.size());
  detail::parallel_for(dbs.size(), [&](std::size_t i) {
    const OutageQuery q = c.query(c.eps, dbs[i]);
    q.validate();
    rows[i].fh = FhFamily(c, q.cfg, c.bound, opts).best(c.eps);
    rows[i].fbs = outage_capacity_fbs(q, opts);
    if (fd_defined(q.cfg)) rows[i].fd = outage_capacity_fd(q);
  });
  csv.row("gamma_db", "v_opt", fh_label(c.bound) + "_maxv", "R_fbs", "R_fd");
  for (std::size_t i = 0; i < dbs.size(); ++i) {
    const auto& r = rows[i];
    csv.row(dbs[i], r.fh.v_used, r.fh.rate, r.fbs.rate, r.fd ? format(r.fd->rate) : std::string("nan"));
  }
}

void cmd_compare(const RunConfig& c, const SolverOptions& opts, CsvWriter& csv) {
  require_gamma(c);
  const NetworkConfig net = c.network();
  net.validate_fd();
  const auto eps = linspace(c.eps_min, c.eps_max, c.eps_steps);
  const FhFamily fh(c, net, c.bound, opts);
  std::vector<std::array<double, 3>> rows(eps.size());
  std::vector<int> v_opt(eps.size());
  detail::parallel_for(eps.size(), [&](std::size_t i) {
    const OutageQuery q = c.query(eps[i]);
    const auto best = fh.best(eps[i]);
    rows[i] = {best.rate, outage_capacity_fbs(q, opts).rate, outage_capacity_fd(q).rate};
    v_opt[i] = best.v_used;
  });
  csv.row("eps", fh_label(c.bound) + "_maxv", "R_fbs", "R_fd", "v_opt");
  for (std::size_t i = 0; i < eps.size(); ++i) csv.row(eps[i], rows[i][0], rows[i][1], rows[i][2], v_opt[i]);
}

// Oracle checks for one configuration. Rows: check,value,reference,tolerance,pass.
bool cmd_validate(const RunConfig& c, const SolverOptions& opts, std::uint64_t seed, std::int64_t samples,
                  CsvWriter& csv) {
  require_gamma(c);
  OutageQuery q = c.query(c.eps);
  q.validate();
  const double eps = c.eps;
  const RngSpec oracle{seed, 2};
  bool all = true;
  csv.row("check", "value", "reference", "tolerance", "pass");
  auto check = [&](const std::string& name, double value, double reference, double tol, bool pass) {
    all = all && pass;
    csv.row(name, value, reference, tol, pass);
  };
  auto agree = [&](const std::string& name, double value, double reference, double tol) {
    check(name, value, reference, tol, std::abs(value - reference) <= tol);
  };

  // FBS: exact law against sampled quantile.
  const auto fbs = outage_capacity_fbs(q, opts);
  const auto fbs_mc = empirical_capacity(eps, RateBound::kFbs, q, samples, oracle.child(0));
  agree("fbs_capacity", fbs.rate, fbs_mc.rate, 3.0 * fbs_mc.std_error + 1e-4 + fbs.residual);

  // Hopping bound 2 at its best v, and the bound chain at that v.
  const int v = c.v ? *c.v : best_v(q, FhBound::kPeakLevel, opts).v_opt;
  q.cfg = q.cfg.with_v(v);
  const auto r2 = outage_capacity_fh(q, FhBound::kPeakLevel, opts);
  const auto lb2_mc = empirical_capacity(eps, RateBound::kLb2, q, samples, oracle.child(1));
  agree("fh2_capacity_v" + std::to_string(v), r2.rate, lb2_mc.rate, 3.0 * lb2_mc.std_error + 1e-4 + r2.residual);

  const auto r3 = outage_capacity_fh(q, FhBound::kClosedForm, opts);
  const auto at_r3 = empirical_outage(r3.rate, RateBound::kLb2, q, samples, oracle.child(2));
  check("fh3_outage_v" + std::to_string(v), at_r3.outage_prob, eps, 3.0 * at_r3.std_error,
        at_r3.outage_prob <= eps + 3.0 * at_r3.std_error);

  const double chain_tol = 2.0 * (r2.residual + r3.residual) + 1e-9;
  check("chain_fh2_ge_fh3", r2.rate, r3.rate, chain_tol, r2.rate >= r3.rate - chain_tol);
  if (q.pmf.n_max() - 1 <= kMaxEnumeratedInterferers) {
    const auto r1 = outage_capacity_fh(q, FhBound::kFullMixture, opts);
    const auto lb1_mc = empirical_capacity(eps, RateBound::kLb1, q, samples, oracle.child(3));
    const double tol1 = 3.0 * std::hypot(lb1_mc.std_error, r1.rate_std_error) + 1e-4 + r1.residual;
    agree("fh1_capacity_v" + std::to_string(v), r1.rate, lb1_mc.rate, tol1);
    const double tol = 2.0 * (r1.residual + r2.residual + 3.0 * r1.rate_std_error) + 1e-9;
    check("chain_fh1_ge_fh2", r1.rate, r2.rate, tol, r1.rate >= r2.rate - tol);
  }

  // FD: exact law, so the empirical outage at R_FD is epsilon itself.
  if (fd_defined(q.cfg)) {
    const auto fd = outage_capacity_fd(q);
    const auto at_fd = empirical_outage(fd.rate, RateBound::kFd, q, samples, oracle.child(4));
    const double sigma = std::sqrt(eps * (1.0 - eps) / static_cast<double>(samples));
    agree("fd_outage", at_fd.outage_prob, eps, 3.0 * sigma);
  }
  return all;
}

}  // namespace

NetworkConfig RunConfig::network(double gamma_db_value) const {
  NetworkConfig net;
  net.u = u;
  net.v = v.value_or(1);
  net.gamma = db_to_linear(gamma_db_value);
  net.n_des = n_des.value_or(u);
  return net;
}

NetworkConfig RunConfig::network() const {
  if (!gamma_db) throw ConfigError("config: gamma_db is required");
  return network(*gamma_db);
}

OutageQuery RunConfig::query(double epsilon, double gamma_db_value) const {
  return OutageQuery{epsilon, network(gamma_db_value), *pmf};
}

OutageQuery RunConfig::query(double epsilon) const { return OutageQuery{epsilon, network(), *pmf}; }

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::optional<double> poisson_lambda;
  std::optional<int> n_max;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not key=value: '" + body + "'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));

    if (key == "u") {
      c.u = parse_number<int>(key, value);
    } else if (key == "v") {
      c.v = parse_number<int>(key, value);
    } else if (key == "gamma_db") {
      c.gamma_db = parse_number<double>(key, value);
    } else if (key == "q") {
      try {
        c.pmf = UserCountPmf(parse_list(key, value));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    } else if (key == "poisson_lambda") {
      poisson_lambda = parse_number<double>(key, value);
    } else if (key == "n_max") {
      n_max = parse_number<int>(key, value);
    } else if (key == "n_des") {
      c.n_des = parse_number<int>(key, value);
    } else if (key == "eps") {
      c.eps = parse_number<double>(key, value);
    } else if (key == "eps_min") {
      c.eps_min = parse_number<double>(key, value);
    } else if (key == "eps_max") {
      c.eps_max = parse_number<double>(key, value);
    } else if (key == "eps_steps") {
      c.eps_steps = parse_number<int>(key, value);
    } else if (key == "gamma_db_min") {
      c.gamma_db_min = parse_number<double>(key, value);
    } else if (key == "gamma_db_max") {
      c.gamma_db_max = parse_number<double>(key, value);
    } else if (key == "gamma_db_steps") {
      c.gamma_db_steps = parse_number<int>(key, value);
    } else if (key == "bound") {
      const int b = parse_number<int>(key, value);
      if (b < 1 || b > 3) throw ConfigError("config: bound must be 1, 2 or 3");
      c.bound = static_cast<FhBound>(b);
    } else if (key == "psi_samples") {
      c.psi_samples = parse_number<std::int64_t>(key, value);
    } else if (key == "psi_estimator") {
      if (value == "mc") {
        c.psi_estimator = PsiEstimator::kMonteCarlo;
      } else if (value == "quad") {
        c.psi_estimator = PsiEstimator::kQuadrature;
      } else {
        throw ConfigError("config: psi_estimator must be 'mc' or 'quad'");
      }
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  if (poisson_lambda) {
    if (c.pmf) throw ConfigError("config: give either q or poisson_lambda, not both");
    if (!n_max) throw ConfigError("config: poisson_lambda needs n_max");
    try {
      c.pmf = poisson_truncated_pmf(*poisson_lambda, *n_max);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (n_max) {
    throw ConfigError("config: n_max is only used with poisson_lambda");
  }
  if (c.u < 1) throw ConfigError("config: u must be given and >= 1");
  if (!c.pmf) throw ConfigError("config: q or poisson_lambda is required");
  if (c.v && (*c.v < 1 || *c.v > c.u)) throw ConfigError("config: v must lie in [1, u]");
  if (c.n_des && *c.n_des < 1) throw ConfigError("config: n_des must be >= 1");
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw ConfigError("config: eps must lie in (0, 1)");
  if (!(c.eps_min > 0.0 && c.eps_max < 1.0 && c.eps_min <= c.eps_max) || c.eps_steps < 1)
    throw ConfigError("config: need 0 < eps_min <= eps_max < 1 and eps_steps >= 1");
  if (!(c.gamma_db_min <= c.gamma_db_max) || c.gamma_db_steps < 1)
    throw ConfigError("config: need gamma_db_min <= gamma_db_max and gamma_db_steps >= 1");
  if (c.psi_samples < 1000) throw ConfigError("config: psi_samples must be >= 1000");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

int run(Command command, const RunConfig& config, std::uint64_t seed, std::int64_t samples, std::ostream& out,
        std::ostream& diag) {
  try {
    const SolverOptions opts = solver_options(config, seed);
    CsvWriter csv(out);
    switch (command) {
      case Command::kCapacity: cmd_capacity(config, opts, csv); break;
      case Command::kSweepEps: cmd_sweep_eps(config, opts, csv); break;
      case Command::kSweepV: cmd_sweep_v(config, opts, csv); break;
      case Command::kSweepSnr: cmd_sweep_snr(config, opts, csv); break;
      case Command::kCompare: cmd_compare(config, opts, csv); break;
      case Command::kValidate:
        if (samples < 10000) throw ConfigError("validate: --samples must be >= 10000");
        if (!cmd_validate(config, opts, seed, samples, csv)) {
          diag << "validate: one or more checks failed\n";
          return kExitValidation;
        }
        break;
    }
  } catch (const ConfigError& e) {
    diag << e.what() << '\n';
    return kExitConfig;
  } catch (const NonConvergence& e) {
    diag << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const std::invalid_argument& e) {
    diag << e.what() << '\n';
    return kExitConfig;
  } catch (const std::length_error& e) {
    diag << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

int run(const RunSpec& spec, std::ostream& diag) {
  RunConfig config;
  try {
    config = load_config(spec.config_path);
  } catch (const ConfigError& e) {
    diag << e.what() << '\n';
    return kExitConfig;
  }
  // Buffer so a failed run leaves no partial file behind.
  std::ostringstream buffer;
  const int code = run(spec.command, config, spec.seed, spec.samples, buffer, diag);
  if (code != kExitOk && code != kExitValidation) return code;
  if (spec.output_path == "-") {
    std::cout << buffer.str();
  } else {
    std::ofstream out(spec.output_path, std::ios::binary);
    if (!out || !(out << buffer.str())) {
      diag << "cannot write '" << spec.output_path << "'\n";
      return kExitConfig;
    }
  }
  return code;
}

}  // namespace fhout::cli
