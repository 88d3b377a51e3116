#pragma once

// Hidden-state telegraph simulations composing the physics and detection
// modules into experiment records: clock-state jumps read out by modulated
// fluorescence, and Zeeman-state jumps read out by red-sideband transfer.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iondetect/atomic_core.hpp"
#include "iondetect/fluorescence.hpp"
#include "iondetect/motional_state.hpp"

namespace iondetect {

// ---------------------------------------------------------------------------
// Records

struct TransitionEvent {
  double time = 0.0;          // s
  std::uint64_t cycle = 0;    // detection sequence / cycle index at which it takes effect
  int from = 0;
  int to = 0;
  std::string cause;          // "drive", "decay", "raman", "depump"
};

/// One row per averaging window. Clock records use true_state 0 = S0,
/// 1 = P0; Zeeman records use 2m.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<int> true_state;
  std::vector<double> signal;
  std::vector<TransitionEvent> events;
  double window_duration = 0.0;
};

// ---------------------------------------------------------------------------
// Clock states

inline constexpr int kClockS0 = 0;
inline constexpr int kClockP0 = 1;

struct ClockTrajectoryConfig {
  double p_drive = 0.1;         // S0 <-> P0 transfer probability per interrogation pulse
  double pulse_period = 2.0;    // s
  double p0_lifetime = 20.0;    // s; a placeholder, no measured value is used
  double sequence_time = 0.85e-3;  // t_d + t_blue + t_red
  double total_time = 120.0;
  double averaging_time = 0.53;
  double beta_s0 = 1.0;         // motional amplitude driven in S0, units of kappa^-1
  int initial_state = kClockS0;
  FluorescenceConfig fluorescence;

  std::size_t sequences_per_window() const;
  std::vector<std::string> violations() const;
  void validate() const;
};

/// Threads are only used for the per-sequence photon draws; each draws
/// from its own (seed, sequence) stream, so the record is the same for
/// every worker count.
TrajectoryRecord simulate_clock(const ClockTrajectoryConfig& cfg, std::uint64_t seed, unsigned workers = 1);

/// Demodulated amplitudes of n_trials independent windows of
/// integration_time, all with the ion held in `state`. A window without
/// photons reads 0.
std::vector<double> clock_window_estimates(int state, std::size_t n_trials, double integration_time,
                                           const ClockTrajectoryConfig& cfg, std::uint64_t seed,
                                           unsigned workers = 1);

// ---------------------------------------------------------------------------
// Zeeman states

struct ZeemanReadoutConfig {
  SidebandConfig sideband;
  double nbar = 0.15;           // residual thermal occupation before the force
  double bright_rate = 5.0e4;   // detected counts/s for |down>
  double dark_rate = 1.0e3;     // counts/s for |up>
  double detect_duration = 200e-6;

  std::vector<std::string> violations() const;
};

/// Expected readout per Zeeman level, index 0..5 for m = -5/2 .. +5/2.
struct DetectionMap {
  std::array<double, ZeemanLabel::kCount> beta{};
  std::array<double, ZeemanLabel::kCount> p_down{};
  std::array<double, ZeemanLabel::kCount> levels{};  // mean counts per cycle
  double bright_mean = 0.0;
  double dark_mean = 0.0;
};

struct ZeemanTrajectoryConfig {
  double p_jump_per_cycle = 2.0e-4;
  std::array<double, 2> jump_kernel{0.5, 0.5};  // P(dm = -1), P(dm = +1)
  /// Per-cycle spontaneous-Raman probability per level. When absent it is
  /// scaled from depump_reference at m = 3/2 by C_m^2 / Delta_m^2.
  std::optional<std::array<double, ZeemanLabel::kCount>> p_raman_depump;
  double depump_reference = 1.0e-4;
  double cycle_time = 1.6e-3;
  /// false: cycle_time is one detection cycle. true: it spans a whole
  /// plotted point of cycles_per_point cycles.
  bool cycle_time_is_per_point = false;
  std::size_t cycles_per_point = 120;
  double total_time = 300.0;
  std::optional<int> initial_twice_m;  // uniform random level when absent
  ZeemanDriveConfig drive;
  std::optional<double> beta_anchor = 2.15;
  ZeemanReadoutConfig readout;

  double seconds_per_cycle() const;
  std::array<double, ZeemanLabel::kCount> depump_probabilities() const;
  std::vector<std::string> violations() const;
  void validate() const;
};

/// Composes beta(m), displaced-thermal populations, the RSB readout and the
/// bright/dark count rates.
DetectionMap predicted_levels(const ZeemanTrajectoryConfig& cfg);

TrajectoryRecord simulate_zeeman(const ZeemanTrajectoryConfig& cfg, std::uint64_t seed, unsigned workers = 1);

/// Thresholds halfway between adjacent predicted levels, ascending, and the
/// Zeeman index of each resulting class.
struct LevelClassifier {
  std::vector<double> thresholds;
  std::vector<int> class_to_index;
};
LevelClassifier level_classifier(const DetectionMap& map);

}  // namespace iondetect
