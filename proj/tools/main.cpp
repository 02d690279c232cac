#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  namespace cli = fhout::cli;
  CLI::App app{"Outage capacity of randomized frequency hopping versus FD and FBS"};
  cli::RunSpec spec;
  std::string command;
  app.add_option("--command", command, "capacity | sweep-eps | sweep-v | sweep-snr | compare | validate")->required();
  app.add_option("--config", spec.config_path, "key=value configuration file")->required();
  app.add_option("--out", spec.output_path, "CSV output path, '-' for stdout")->capture_default_str();
  app.add_option("--seed", spec.seed, "seed for every Monte Carlo stream")->capture_default_str();
  app.add_option("--samples", spec.samples, "Monte Carlo draws used by validate")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }
  const auto parsed = cli::parse_command(command);
  if (!parsed) {
    std::cerr << "unknown command '" << command << "'\n";
    return cli::kExitConfig;
  }
  spec.command = *parsed;
  return cli::run(spec, std::cerr);
}
