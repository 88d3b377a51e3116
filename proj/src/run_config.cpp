#include "iondetect/run_config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <type_traits>

namespace iondetect {

using nlohmann::json;

namespace {

enum class Unit { plain, angular };

template <typename T>
struct is_optional : std::false_type {};
template <typename T>
struct is_optional<std::optional<T>> : std::true_type {};

template <typename T>
struct is_std_array : std::false_type {};
template <typename T, std::size_t N>
struct is_std_array<std::array<T, N>> : std::true_type {};

// ---------------------------------------------------------------------------
// Field tables. C may be const-qualified; the same table drives parsing and
// serialisation.

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, ZeemanDriveConfig>
void fields(C& c, F&& f) {
  f("delta_R", c.delta_R, Unit::angular);
  f("omega0_prime", c.omega0_prime, Unit::angular);
  f("t_d", c.t_d);
  f("B0", c.B0);
  f("g_P1", c.g_P1);
  f("g_I", c.g_I);
  f("z0_Al", c.z0_Al);
  f("lambda_P1", c.lambda_P1);
  f("eta_override", c.eta_override);
  f("larmor_override", c.larmor_override, Unit::angular);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, SidebandConfig>
void fields(C& c, F&& f) {
  f("omega1", c.omega1, Unit::angular);
  f("t_rsb", c.t_rsb);
  f("exact_eta", c.exact_eta);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, ZeemanReadoutConfig>
void fields(C& c, F&& f) {
  f("sideband", c.sideband);
  f("nbar", c.nbar);
  f("bright_rate", c.bright_rate);
  f("dark_rate", c.dark_rate);
  f("detect_duration", c.detect_duration);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, FluorescenceConfig>
void fields(C& c, F&& f) {
  f("omega_M", c.omega_M, Unit::angular);
  f("n_bins", c.n_bins);
  f("mean_rate", c.mean_rate);
  f("mod_depth_per_unit_amp", c.mod_depth_per_unit_amp);
  f("t_blue", c.t_blue);
  f("t_red", c.t_red);
  f("gain_blue", c.gain_blue);
  f("gain_red", c.gain_red);
  f("phi_M", c.phi_M);
  f("red_phase_flip", c.red_phase_flip);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, ClockTrajectoryConfig>
void fields(C& c, F&& f) {
  f("p_drive", c.p_drive);
  f("pulse_period", c.pulse_period);
  f("p0_lifetime", c.p0_lifetime);
  f("sequence_time", c.sequence_time);
  f("total_time", c.total_time);
  f("averaging_time", c.averaging_time);
  f("beta_s0", c.beta_s0);
  f("initial_state", c.initial_state);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, ZeemanTrajectoryConfig>
void fields(C& c, F&& f) {
  f("p_jump_per_cycle", c.p_jump_per_cycle);
  f("jump_kernel", c.jump_kernel);
  f("p_raman_depump", c.p_raman_depump);
  f("depump_reference", c.depump_reference);
  f("cycle_time", c.cycle_time);
  f("cycle_time_is_per_point", c.cycle_time_is_per_point);
  f("cycles_per_point", c.cycles_per_point);
  f("total_time", c.total_time);
  f("initial_twice_m", c.initial_twice_m);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, NmrConfig>
void fields(C& c, F&& f) {
  f("omega_B_rabi", c.omega_B_rabi, Unit::angular);
  f("delta_B", c.delta_B, Unit::angular);
  f("t_max", c.t_max);
  f("dt", c.dt);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, RsbCalibrationSettings>
void fields(C& c, F&& f) {
  f("t_max", c.t_max);
  f("n_points", c.n_points);
  f("trials", c.trials);
  f("nbar", c.nbar);
  f("beta_max", c.beta_max);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, NmrScanSettings>
void fields(C& c, F&& f) {
  f("detuning_ratios", c.detuning_ratios);
  f("n_points", c.n_points);
  f("cycles_per_point", c.cycles_per_point);
  f("depump_probability", c.depump_probability);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, ClockAnalysisSettings>
void fields(C& c, F&& f) {
  f("threshold", c.threshold);
  f("averaging_window", c.averaging_window);
  f("histogram_bin_width", c.histogram_bin_width);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, ZeemanAnalysisSettings>
void fields(C& c, F&& f) {
  f("averaging_window", c.averaging_window);
  f("histogram_bin_width", c.histogram_bin_width);
  f("prominence_sigmas", c.prominence_sigmas);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, FidelitySweepSettings>
void fields(C& c, F&& f) {
  f("integration_time", c.integration_time);
  f("integration_times", c.integration_times);
  f("mean_rates", c.mean_rates);
  f("trials", c.trials);
  f("threshold", c.threshold);
}

template <typename C, typename F>
  requires std::same_as<std::remove_const_t<C>, RunConfig>
void sections(C& c, F&& f) {
  f("drive", c.drive);
  f("beta_anchor", c.beta_anchor);
  f("readout", c.readout);
  f("fluorescence", c.fluorescence);
  f("clock", c.clock);
  f("zeeman", c.zeeman);
  f("nmr", c.nmr);
  f("rsb", c.rsb);
  f("nmr_scan", c.nmr_scan);
  f("clock_analysis", c.clock_analysis);
  f("zeeman_analysis", c.zeeman_analysis);
  f("fidelity", c.fidelity);
}

template <typename T>
concept HasFields = requires(T& t) { fields(t, [](auto&&...) {}); };

// ---------------------------------------------------------------------------
// Reading

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw ConfigParseError(path + ": " + what);
}

double read_double(const json& v, const std::string& path, Unit unit) {
  if (unit == Unit::angular && v.is_object()) {
    if (v.size() != 1 || !v.contains("hz") || !v["hz"].is_number()) {
      parse_fail(path, "angular frequency object must be {\"hz\": number}");
    }
    return constants::two_pi * v["hz"].get<double>();
  }
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) parse_fail(path, "expected a number");
  return v.get<double>();
}

template <typename T>
void read_value(const json& v, T& out, const std::string& path, Unit unit);

template <typename T>
void read_object(const json& obj, T& cfg, const std::string& path) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  std::set<std::string> known;
  fields(cfg, [&](const char* name, auto& member, Unit unit = Unit::plain) {
    known.insert(name);
    if (obj.contains(name)) read_value(obj.at(name), member, path + "." + name, unit);
  });
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) parse_fail(path + "." + key, "unknown key");
  }
}

template <typename T>
void read_value(const json& v, T& out, const std::string& path, Unit unit) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) parse_fail(path, "expected true/false");
    out = v.get<bool>();
  } else if constexpr (std::is_same_v<T, double>) {
    out = read_double(v, path, unit);
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) parse_fail(path, "expected an integer");
    if (std::is_unsigned_v<T> && v.get<long long>() < 0) parse_fail(path, "expected a non-negative integer");
    out = v.get<T>();
  } else if constexpr (is_optional<T>::value) {
    if (v.is_null()) {
      out.reset();
    } else {
      typename T::value_type inner{};
      if (out) inner = *out;
      read_value(v, inner, path, unit);
      out = inner;
    }
  } else if constexpr (is_std_array<T>::value) {
    if (!v.is_array() || v.size() != std::tuple_size_v<T>) {
      parse_fail(path, "expected an array of " + std::to_string(std::tuple_size_v<T>) + " numbers");
    }
    for (std::size_t i = 0; i < out.size(); ++i) read_value(v[i], out[i], path + "[" + std::to_string(i) + "]", unit);
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!v.is_array()) parse_fail(path, "expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_double(v[i], path + "[" + std::to_string(i) + "]", unit));
  } else if constexpr (HasFields<T>) {
    read_object(v, out, path);
  } else {
    static_assert(sizeof(T) == 0, "unsupported config field type");
  }
}

// ---------------------------------------------------------------------------
// Writing

template <typename T>
json write_value(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return std::isfinite(v) ? json(v) : json(nullptr);
  } else if constexpr (std::is_arithmetic_v<T>) {
    return json(v);
  } else if constexpr (is_optional<T>::value) {
    return v ? write_value(*v) : json(nullptr);
  } else if constexpr (is_std_array<T>::value || std::is_same_v<T, std::vector<double>>) {
    json arr = json::array();
    for (const auto& x : v) arr.push_back(write_value(x));
    return arr;
  } else if constexpr (HasFields<T>) {
    json obj = json::object();
    fields(v, [&](const char* name, const auto& member, Unit = Unit::plain) { obj[name] = write_value(member); });
    return obj;
  } else {
    static_assert(sizeof(T) == 0, "unsupported config field type");
  }
}

void append(std::vector<std::string>& out, const std::string& prefix, const std::vector<std::string>& items) {
  for (const auto& s : items) out.push_back(prefix + s);
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::beta_table: return "beta-table";
    case Experiment::rsb_calibrate: return "rsb-calibrate";
    case Experiment::clock_detect: return "clock-detect";
    case Experiment::zeeman_jumps: return "zeeman-jumps";
    case Experiment::nmr_scan: return "nmr-scan";
    case Experiment::fidelity_sweep: return "fidelity-sweep";
  }
  return "unknown";
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all{Experiment::beta_table,   Experiment::rsb_calibrate,
                                           Experiment::clock_detect, Experiment::zeeman_jumps,
                                           Experiment::nmr_scan,     Experiment::fidelity_sweep};
  return all;
}

Experiment parse_experiment(const std::string& name) {
  for (auto e : all_experiments()) {
    if (to_string(e) == name) return e;
  }
  throw ConfigParseError("experiment: unknown experiment '" + name + "'");
}

ClockTrajectoryConfig RunConfig::clock_config() const {
  ClockTrajectoryConfig c = clock;
  c.fluorescence = fluorescence;
  return c;
}

ZeemanTrajectoryConfig RunConfig::zeeman_config() const {
  ZeemanTrajectoryConfig z = zeeman;
  z.drive = drive;
  z.beta_anchor = beta_anchor;
  z.readout = readout;
  return z;
}

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> out;
  append(out, "overrides.drive.", drive.violations());
  if (beta_anchor && !(*beta_anchor >= 0.0)) out.emplace_back("overrides.beta_anchor: must be >= 0");
  append(out, "overrides.readout.", readout.violations());
  append(out, "overrides.fluorescence.", fluorescence.violations());
  {
    ClockTrajectoryConfig c = clock_config();
    std::vector<std::string> own;
    for (const auto& v : c.violations()) {
      if (v.rfind("fluorescence.", 0) != 0) own.push_back(v);
    }
    append(out, "overrides.clock.", own);
  }
  {
    ZeemanTrajectoryConfig z = zeeman_config();
    std::vector<std::string> own;
    for (const auto& v : z.violations()) {
      if (v.rfind("drive.", 0) != 0 && v.rfind("readout.", 0) != 0 && v.rfind("beta_anchor", 0) != 0) own.push_back(v);
    }
    append(out, "overrides.zeeman.", own);
  }
  append(out, "overrides.nmr.", nmr.violations());
  for (double ratio : nmr_scan.detuning_ratios) {
    NmrConfig c = nmr;
    c.delta_B = ratio * nmr.omega_B_rabi;
    if (c.dt > c.max_step()) {
      out.push_back("overrides.nmr.dt: step " + std::to_string(c.dt) + " s exceeds the bound " +
                    std::to_string(c.max_step()) + " s for detuning ratio " + std::to_string(ratio));
    }
  }
  if (rsb.n_points < 5) out.emplace_back("overrides.rsb.n_points: need at least 5 points");
  if (rsb.trials < 1) out.emplace_back("overrides.rsb.trials: must be >= 1");
  if (!(rsb.t_max > 0.0)) out.emplace_back("overrides.rsb.t_max: must be > 0");
  if (!(rsb.nbar >= 0.0)) out.emplace_back("overrides.rsb.nbar: must be >= 0");
  if (!(rsb.beta_max > 0.0)) out.emplace_back("overrides.rsb.beta_max: must be > 0");
  if (nmr_scan.n_points < 8) out.emplace_back("overrides.nmr_scan.n_points: need at least 8 points");
  if (nmr_scan.cycles_per_point < 1) out.emplace_back("overrides.nmr_scan.cycles_per_point: must be >= 1");
  if (!(nmr_scan.depump_probability >= 0.0 && nmr_scan.depump_probability <= 1.0)) {
    out.emplace_back("overrides.nmr_scan.depump_probability: must lie in [0, 1]");
  }
  if (nmr_scan.detuning_ratios.empty()) out.emplace_back("overrides.nmr_scan.detuning_ratios: must not be empty");
  if (clock_analysis.averaging_window < 1) out.emplace_back("overrides.clock_analysis.averaging_window: must be >= 1");
  if (!(clock_analysis.histogram_bin_width > 0.0)) out.emplace_back("overrides.clock_analysis.histogram_bin_width: must be > 0");
  if (zeeman_analysis.averaging_window < 1) out.emplace_back("overrides.zeeman_analysis.averaging_window: must be >= 1");
  if (!(zeeman_analysis.histogram_bin_width > 0.0)) out.emplace_back("overrides.zeeman_analysis.histogram_bin_width: must be > 0");
  if (!(zeeman_analysis.prominence_sigmas >= 0.0)) out.emplace_back("overrides.zeeman_analysis.prominence_sigmas: must be >= 0");
  if (!(fidelity.integration_time > 0.0)) out.emplace_back("overrides.fidelity.integration_time: must be > 0");
  for (double t : fidelity.integration_times) {
    if (!(t > 0.0)) {
      out.emplace_back("overrides.fidelity.integration_times: entries must be > 0");
      break;
    }
  }
  for (double r : fidelity.mean_rates) {
    if (!(r >= 0.0)) {
      out.emplace_back("overrides.fidelity.mean_rates: entries must be >= 0");
      break;
    }
  }
  if (fidelity.trials < 1) out.emplace_back("overrides.fidelity.trials: must be >= 1");
  return out;
}

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigParseError("config: top level must be an object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key != "experiment" && key != "seed" && key != "output_dir" && key != "overrides") {
      throw ConfigParseError(key + ": unknown key");
    }
  }
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    throw ConfigParseError("experiment: required string");
  }
  cfg.experiment = parse_experiment(j["experiment"].get<std::string>());
  if (!j.contains("seed")) throw ConfigParseError("seed: required (no entropy-based default)");
  if (!j["seed"].is_number_unsigned()) throw ConfigParseError("seed: expected a non-negative 64-bit integer");
  cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigParseError("output_dir: expected a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("overrides")) {
    const json& ov = j["overrides"];
    if (!ov.is_object()) throw ConfigParseError("overrides: expected an object");
    std::set<std::string> known;
    sections(cfg, [&](const char* name, auto& member) {
      known.insert(name);
      if (ov.contains(name)) read_value(ov.at(name), member, std::string("overrides.") + name, Unit::plain);
    });
    for (const auto& [key, value] : ov.items()) {
      if (!known.count(key)) throw ConfigParseError("overrides." + key + ": unknown key");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError(path.string() + ": cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigParseError(path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
  json ov = json::object();
  sections(cfg, [&](const char* name, const auto& member) { ov[name] = write_value(member); });
  return {{"experiment", to_string(cfg.experiment)},
          {"seed", cfg.seed},
          {"output_dir", cfg.output_dir.string()},
          {"overrides", ov}};
}

}  // namespace iondetect
