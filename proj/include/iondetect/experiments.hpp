#pragma once

// Experiment runners behind the command-line tool. Each writes its data
// files into the output directory followed by manifest.json.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iondetect/run_config.hpp"

namespace iondetect {

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<std::string> data_files;  // manifest.json excluded
  nlohmann::json manifest;
};

/// Throws ConfigError when cfg.violations() is non-empty and IoError when
/// an output cannot be written. Data files depend only on cfg; the worker
/// count changes scheduling, never results.
RunResult run_experiment(const RunConfig& cfg, unsigned workers = 1,
                         std::optional<std::filesystem::path> output_override = std::nullopt);

}  // namespace iondetect
