#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "centroidkit/error.hpp"
#include "centroidkit/experiments.hpp"

namespace ck = centroidkit;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

int jobs_from_env() {
  if (const char* env = std::getenv("CENTROIDKIT_JOBS")) {
    try {
      const int j = std::stoi(env);
      if (j > 0) return j;
    } catch (const std::exception&) {
    }
    throw ck::ConfigError("CENTROIDKIT_JOBS must be a positive integer");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run a centroidkit experiment and write report.json, tables/*.csv and plots/*.svg."};
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> jobs;
  bool list = false;

  std::string names;
  for (const auto& n : ck::experiment_names()) names += "\n  " + n;
  app.add_option("experiment", experiment, "Experiment name:" + names);
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads (default: CENTROIDKIT_JOBS, then all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--list", list, "List experiment names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  if (list) {
    for (const auto& n : ck::experiment_names()) std::cout << n << '\n';
    return kExitPass;
  }

  try {
    if (experiment.empty()) throw ck::ConfigError("an experiment name is required (see --list)");
    if (config_path.empty()) throw ck::ConfigError("--config is required");
    const int workers = jobs ? *jobs : jobs_from_env();
    const auto config = ck::load_config(config_path, experiment, seed, workers);
    const auto report = ck::run(config);
    ck::write_report(report, out);
    ck::emit_plots(report, out);
    int failed = 0;
    for (const auto& v : report.verdicts) {
      std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
      failed += v.pass ? 0 : 1;
    }
    std::cout << experiment << ": " << report.verdicts.size() - failed << "/" << report.verdicts.size()
              << " checks passed, report in " << out << '\n';
    return failed == 0 ? kExitPass : kExitFail;
  } catch (const ck::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
}
