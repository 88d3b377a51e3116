#pragma once

// Experiment run configuration: JSON file -> typed module configs.
//
// Layout:
//   { "experiment": "...", "seed": <u64>, "output_dir": "...",
//     "overrides": { "<section>": { "<field>": value, ... }, ... } }
//
// Section fields mirror the module config types. Angular frequencies are
// rad/s, or {"hz": f} for 2 pi f. null reads as +inf for plain numbers
// (e.g. a P0 lifetime without decay) and as "unset" for optional ones.
// Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iondetect/atomic_core.hpp"
#include "iondetect/fluorescence.hpp"
#include "iondetect/nmr.hpp"
#include "iondetect/trajectory.hpp"

namespace iondetect {

class ConfigParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { beta_table, rsb_calibrate, clock_detect, zeeman_jumps, nmr_scan, fidelity_sweep };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);
const std::vector<Experiment>& all_experiments();

struct RsbCalibrationSettings {
  double t_max = 40e-6;
  std::size_t n_points = 41;
  long trials = 300;
  double nbar = 0.0;       // motion after ground-state cooling
  double beta_max = 8.0;
};

struct NmrScanSettings {
  std::vector<double> detuning_ratios{0.0, 2.0};  // Delta_B / Omega_B per curve
  std::size_t n_points = 61;
  std::size_t cycles_per_point = 200;
  double depump_probability = 0.0;
};

struct ClockAnalysisSettings {
  std::optional<double> threshold;  // default: half the S0 modulation depth
  std::size_t averaging_window = 1;
  double histogram_bin_width = 0.005;
};

struct ZeemanAnalysisSettings {
  std::size_t averaging_window = 1;
  double histogram_bin_width = 0.1;
  double prominence_sigmas = 3.0;
};

struct FidelitySweepSettings {
  double integration_time = 0.08;
  std::vector<double> integration_times{0.01, 0.02, 0.04, 0.08, 0.16};
  std::vector<double> mean_rates{2.5e3, 5.0e3, 1.0e4, 2.0e4, 4.0e4};
  std::size_t trials = 2000;
  std::optional<double> threshold;
};

struct RunConfig {
  Experiment experiment = Experiment::beta_table;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  ZeemanDriveConfig drive;
  std::optional<double> beta_anchor = 2.15;
  ZeemanReadoutConfig readout;
  FluorescenceConfig fluorescence;
  ClockTrajectoryConfig clock;     // its fluorescence member is ignored; see clock_config()
  ZeemanTrajectoryConfig zeeman;   // drive / anchor / readout come from the shared sections
  NmrConfig nmr;
  RsbCalibrationSettings rsb;
  NmrScanSettings nmr_scan;
  ClockAnalysisSettings clock_analysis;
  ZeemanAnalysisSettings zeeman_analysis;
  FidelitySweepSettings fidelity;

  ClockTrajectoryConfig clock_config() const;
  ZeemanTrajectoryConfig zeeman_config() const;

  /// Every invariant violation across all sections, prefixed with its key.
  std::vector<std::string> violations() const;
};

/// Throws ConfigParseError on malformed JSON, wrong types, unknown keys or
/// a missing seed.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved config, every field explicit.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace iondetect
