#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "centroidkit/serialize.hpp"
#include "centroidkit/svg.hpp"

namespace centroidkit {

/// A parsed experiment configuration. `raw` keeps the JSON document (with the
/// effective seed) so reports can echo it for replay.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  Json raw;
  /// Worker threads; never part of the report.
  int jobs = 0;
};

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::uint64_t seed = 0;
  Json config;
  Json cells = Json::array();
  Json summary = Json::object();
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, Plot>> plots;
  double wall_seconds = 0.0;

  bool passed() const;
  /// Everything except the wall clock.
  Json to_json() const;
};

/// Names accepted by run(), in a fixed order.
const std::vector<std::string>& experiment_names();

/// Builds a config from a JSON document. The experiment named on the command
/// line wins over an "experiment" key; a mismatch is a config error, as is a
/// missing seed when no override is given.
ExperimentConfig make_config(const Json& doc, const std::string& experiment, std::optional<std::uint64_t> seed,
                             int jobs);
ExperimentConfig load_config(const std::filesystem::path& file, const std::string& experiment,
                             std::optional<std::uint64_t> seed, int jobs);

/// Runs a named experiment. Throws ConfigError on invalid configurations.
ExperimentReport run(const ExperimentConfig& config);

/// report.json (deterministic), timing.json and tables/*.csv under dir.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);
/// plots/*.svg under dir; nothing is written for a report without plots.
void emit_plots(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace centroidkit
