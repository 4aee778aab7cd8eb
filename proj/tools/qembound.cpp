#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qembound/cli/config.hpp"
#include "qembound/cli/report.hpp"
#include "qembound/cli/runner.hpp"
#include "qembound/cli/verify.hpp"

namespace {

using namespace qembound;
using namespace qembound::cli;

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  require(out.good(), ErrorKind::io_error, "cannot write '" + *path + "'");
  out << text;
  out.flush();
  require(out.good(), ErrorKind::io_error, "failed writing '" + *path + "'");
}

int run_verify(const VerifyOptions& options, const std::optional<std::string>& output) {
  const auto checks = verify_suite(options);
  std::ostringstream text;
  print_checks(text, checks);
  emit(output, text.str());
  return all_passed(checks) ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadratic-exponential moments, MGF norm bounds and tail bounds for quantum harmonic systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  auto* run = app.add_subcommand("run", "Evaluate a scenario file and write a CSV report");
  run->add_option("config", config_path, "Scenario JSON file")->required();
  run->add_option("--output", output, "CSV destination (default: the config's output, else stdout)");
  run->add_option("--seed", seed, "Monte-Carlo seed (overrides the config)");
  run->add_option("--samples", samples, "Monte-Carlo sample count (overrides the config)")
      ->check(CLI::Range(std::uint64_t{2}, std::numeric_limits<std::uint64_t>::max()));

  bool quick = false;
  auto* verify = app.add_subcommand("verify", "Run the classical-limit verification suite");
  verify->add_flag("--quick", quick, "Use fewer Monte-Carlo samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (verify->parsed()) return run_verify({quick, kDefaultSeed, kDefaultSamples}, std::nullopt);

    ScenarioConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (samples) config.samples = *samples;
    if (output) config.output = output;
    if (config.kind == ScenarioKind::verify)
      return run_verify({config.quick, config.seed, config.samples}, config.output);

    const BoundReport report = run_scenario(config);
    emit(config.output, to_csv(report));
    return exit_code(report);
  } catch (const std::exception& e) {
    std::cerr << "qembound: " << e.what() << '\n';
    return kExitError;
  }
}
