#include "iondetect/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace iondetect {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

template <typename Int>
std::string int_str(Int v) {
  return std::to_string(v);
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  row(header);
}

CsvTable& CsvTable::row(std::initializer_list<std::string> cells) {
  return row(std::vector<std::string>(cells));
}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw IoError("CsvTable: row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) body_.push_back(',');
    body_ += cells[i];
  }
  body_.push_back('\n');
  return *this;
}

std::string CsvTable::str() const { return body_; }

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw IoError("cannot create output directory " + root_.string() + ": " + ec.message());
}

std::filesystem::path OutputDir::path_for(const std::string& name) const {
  if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos ||
      name == "." || name == "..") {
    throw IoError("output file name '" + name + "' must be a plain name inside the output directory");
  }
  return root_ / name;
}

void OutputDir::write(const std::string& name, const std::string& content) {
  const auto path = path_for(name);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
  written_.push_back(name);
}

void OutputDir::write_json(const std::string& name, const nlohmann::json& j) {
  write(name, j.dump(2) + "\n");
}

std::string flopping_csv(std::span<const RsbObservation> curve) {
  CsvTable t({"t_seconds", "p_down", "trials", "successes"});
  for (const auto& o : curve) {
    t.row({format_number(o.t), format_number(o.p_down), int_str(o.trials), format_number(o.successes())});
  }
  return t.str();
}

std::vector<RsbObservation> parse_flopping_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t_seconds,p_down,trials", 0) != 0) {
    throw IoError("flopping CSV: missing header t_seconds,p_down,trials,successes");
  }
  std::vector<RsbObservation> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t, p, n;
    if (!std::getline(row, t, ',') || !std::getline(row, p, ',') || !std::getline(row, n, ',')) {
      throw IoError("flopping CSV: malformed row '" + line + "'");
    }
    try {
      out.push_back({std::stod(t), std::stod(p), std::stol(n)});
    } catch (const std::exception&) {
      throw IoError("flopping CSV: malformed row '" + line + "'");
    }
  }
  return out;
}

std::string binned_counts_csv(std::span<const BinnedCounts> sequences) {
  const std::size_t bins = sequences.empty() ? 16 : sequences.front().counts.size();
  std::vector<std::string> header{"sequence_index"};
  for (std::size_t k = 0; k < bins; ++k) header.push_back("bin_" + std::to_string(k));
  header.emplace_back("duration_s");
  CsvTable t(header);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    std::vector<std::string> cells{std::to_string(i)};
    for (auto c : sequences[i].counts) cells.push_back(std::to_string(c));
    cells.push_back(format_number(sequences[i].total_duration));
    t.row(cells);
  }
  return t.str();
}

std::string trajectory_csv(const TrajectoryRecord& rec) {
  CsvTable t({"time_s", "true_state", "signal"});
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    t.row({format_number(rec.times[i]), std::to_string(rec.true_state[i]), format_number(rec.signal[i])});
  }
  return t.str();
}

nlohmann::json events_json(std::span<const TransitionEvent> events) {
  auto arr = nlohmann::json::array();
  for (const auto& e : events) {
    arr.push_back({{"time_s", e.time}, {"cycle", e.cycle}, {"from", e.from}, {"to", e.to}, {"cause", e.cause}});
  }
  return arr;
}

nlohmann::json trajectory_json(const TrajectoryRecord& rec) {
  nlohmann::json signal = nlohmann::json::array();
  for (double s : rec.signal) signal.push_back(std::isfinite(s) ? nlohmann::json(s) : nlohmann::json(nullptr));
  return {{"window_duration_s", rec.window_duration},
          {"time_s", rec.times},
          {"true_state", rec.true_state},
          {"signal", signal},
          {"events", events_json(rec.events)}};
}

nlohmann::json jumps_json(std::span<const Jump> jumps) {
  auto arr = nlohmann::json::array();
  for (const auto& j : jumps) arr.push_back({{"index", j.index}, {"from", j.from}, {"to", j.to}});
  return arr;
}

std::string histogram_csv(const Histogram& h) {
  CsvTable t({"bin_center", "count"});
  for (std::size_t k = 0; k < h.counts.size(); ++k) t.row({format_number(h.centers[k]), std::to_string(h.counts[k])});
  return t.str();
}

std::string resonance_csv(std::span<const ResonanceCurve> curves, std::span<const double> detunings) {
  if (curves.size() != detunings.size()) throw IoError("resonance_csv: one detuning per curve required");
  CsvTable t({"delta_B_rad_s", "t_s", "expected_signal", "mc_signal", "mc_err"});
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& curve = curves[c];
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
      const bool mc = i < curve.mc_signal.size();
      t.row({format_number(detunings[c]), format_number(curve.times[i]), format_number(curve.expected[i]),
             mc ? format_number(curve.mc_signal[i]) : "", mc ? format_number(curve.mc_err[i]) : ""});
    }
  }
  return t.str();
}

}  // namespace iondetect
