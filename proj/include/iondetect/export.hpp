#pragma once

// CSV / JSON serialisation of simulation products. Numbers are written in
// shortest round-trip form so identical results give identical bytes.

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iondetect/estimators.hpp"
#include "iondetect/fluorescence.hpp"
#include "iondetect/motional_state.hpp"
#include "iondetect/nmr.hpp"
#include "iondetect/trajectory.hpp"

namespace iondetect {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_number(double v);

/// Row-oriented CSV builder.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(std::initializer_list<std::string> cells);
  CsvTable& row(const std::vector<std::string>& cells);
  std::string str() const;

 private:
  std::size_t columns_;
  std::string body_;
};

/// A directory that only accepts plain file names, so nothing is written
/// outside of it.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path_for(const std::string& name) const;
  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& j);
  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

/// t_seconds, p_down, trials, successes
std::string flopping_csv(std::span<const RsbObservation> curve);
std::vector<RsbObservation> parse_flopping_csv(const std::string& text);

/// sequence_index, bin_0 .. bin_{n-1}, duration_s
std::string binned_counts_csv(std::span<const BinnedCounts> sequences);

/// time_s, true_state, signal
std::string trajectory_csv(const TrajectoryRecord& rec);
nlohmann::json trajectory_json(const TrajectoryRecord& rec);
nlohmann::json events_json(std::span<const TransitionEvent> events);

/// [{index, from, to}, ...]
nlohmann::json jumps_json(std::span<const Jump> jumps);

/// bin_center, count
std::string histogram_csv(const Histogram& h);

/// t_s, expected_signal, mc_signal, mc_err, prefixed by delta_B_rad_s.
std::string resonance_csv(std::span<const ResonanceCurve> curves, std::span<const double> detunings);

}  // namespace iondetect
