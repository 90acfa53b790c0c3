#pragma once

#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

// Per-trial records; cells are pre-formatted (floats with 17 significant
// digits) so CSV output is byte-stable.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const;
  double num(std::size_t row, int c) const;
};

struct RunResult {
  nlohmann::json manifest;
  bool pass = true;
  std::string records_path;
  std::string manifest_path;
};

nlohmann::json default_config(const std::string& experiment);

// defaults <- file <- overrides; unknown keys are rejected.
nlohmann::json effective_config(const std::string& experiment,
                                const nlohmann::json& file_config,
                                const nlohmann::json& overrides);

// Executes the configured experiment, writes <out>/records.csv and
// <out>/manifest.json, and returns the manifest.
RunResult run_experiment(const nlohmann::json& config);

// Merge manifests of identical experiments/grids and recompute the checks
// from the pooled records.
nlohmann::json summarize(const std::vector<std::string>& manifest_paths);

std::string format_double(double v);  // %.17g
std::string csv_escape(const std::string& cell);

int worker_count(const nlohmann::json& config, std::int64_t work_items);

}  // namespace bandlab
