#include "iondetect/experiments.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "iondetect/atomic_core.hpp"
#include "iondetect/errors.hpp"
#include "iondetect/estimators.hpp"
#include "iondetect/export.hpp"
#include "iondetect/motional_state.hpp"
#include "iondetect/nmr.hpp"
#include "iondetect/parallel.hpp"
#include "iondetect/rng.hpp"
#include "iondetect/sha256.hpp"
#include "iondetect/trajectory.hpp"

namespace iondetect {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

// Sub-seed for the k-th independent run inside one experiment.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) { return splitmix64(seed ^ splitmix64(k + 0x5851f42d4c957f2dULL)); }

json transition_counts(std::span<const TransitionEvent> events) {
  json out = json::object();
  for (const auto& e : events) {
    out[e.cause] = out.value(e.cause, 0) + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

void run_beta_table(const RunConfig& cfg, OutputDir& out) {
  const auto table = beta_table(cfg.drive, cfg.beta_anchor);
  CsvTable csv({"m", "twice_m", "clebsch", "detuning_hz", "beta_forward", "beta", "lamb_dicke_warning"});
  for (const auto& row : table) {
    csv.row({row.m.str(), std::to_string(row.m.twice()), format_number(row.clebsch),
             format_number(row.detuning / constants::two_pi), format_number(row.beta_forward),
             format_number(row.beta), row.lamb_dicke_warning ? "1" : "0"});
  }
  out.write("beta_table.csv", csv.str());
  out.write_json("summary.json", {{"lamb_dicke", effective_lamb_dicke(cfg.drive)},
                                  {"larmor_hz", effective_larmor_frequency(cfg.drive) / constants::two_pi},
                                  {"anchor_beta_5_2", cfg.beta_anchor ? json(*cfg.beta_anchor) : json(nullptr)},
                                  {"forward_beta_5_2", table.back().beta_forward}});
}

void run_rsb_calibrate(const RunConfig& cfg, OutputDir& out) {
  const auto table = beta_table(cfg.drive, cfg.beta_anchor);
  const auto& s = cfg.rsb;
  const auto times = linspace(0.0, s.t_max, s.n_points);
  json fits = json::array();
  CsvTable derived({"m", "beta_true", "beta_fit", "sigma", "lower", "upper"});
  for (const auto& row : table) {
    const auto dist = displaced_thermal(row.beta, s.nbar);
    const auto p = rsb_flopping_curve(dist, cfg.readout.sideband.omega1, times, cfg.readout.sideband.exact_eta);
    Rng rng = derive_stream(cfg.seed, stream::rsb_sampling, static_cast<std::uint64_t>(row.m.index()));
    std::vector<RsbObservation> curve;
    curve.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::binomial_distribution<long> draw(s.trials, std::clamp(p[i], 0.0, 1.0));
      curve.push_back({times[i], static_cast<double>(draw(rng)) / static_cast<double>(s.trials), s.trials});
    }
    out.write("flopping_m" + std::to_string(row.m.twice()) + ".csv", flopping_csv(curve));
    json entry{{"m", row.m.str()}, {"beta_true", row.beta}};
    try {
      const BetaFit fit = fit_coherent_beta(curve, cfg.readout.sideband.omega1, s.beta_max);
      entry.update({{"beta_fit", fit.beta},
                    {"sigma", finite_or_null(fit.sigma)},
                    {"lower", fit.lower},
                    {"upper", fit.upper},
                    {"log_likelihood", fit.log_likelihood}});
      derived.row({row.m.str(), format_number(row.beta), format_number(fit.beta), format_number(fit.sigma),
                   format_number(fit.lower), format_number(fit.upper)});
    } catch (const NonIdentifiableError& e) {
      entry["error"] = e.what();
      derived.row({row.m.str(), format_number(row.beta), "nan", "nan", "nan", "nan"});
    }
    fits.push_back(entry);
  }
  out.write("beta_fit_table.csv", derived.str());
  out.write_json("fit.json", {{"nbar", s.nbar}, {"trials_per_point", s.trials}, {"fits", fits}});
}

void write_histogram_outputs(OutputDir& out, const TrajectoryRecord& rec, const std::vector<Jump>& jumps,
                             double bin_width, double prominence, json& summary) {
  const Histogram h = histogram(rec.signal, bin_width);
  out.write("trajectory.csv", trajectory_csv(rec));
  out.write_json("trajectory.json", trajectory_json(rec));
  out.write_json("events.json", events_json(rec.events));
  out.write("histogram.csv", histogram_csv(h));
  out.write_json("jumps.json", jumps_json(jumps));
  summary["n_windows"] = rec.times.size();
  summary["window_duration_s"] = rec.window_duration;
  summary["true_transitions"] = transition_counts(rec.events);
  summary["detected_jumps"] = jumps.size();
  summary["resolved_maxima"] = resolved_maxima(h, prominence).size();
}

void run_clock_detect(const RunConfig& cfg, unsigned workers, OutputDir& out) {
  const auto clock = cfg.clock_config();
  const TrajectoryRecord rec = simulate_clock(clock, cfg.seed, workers);
  const double depth = sequence_depths(clock.beta_s0, clock.fluorescence).time_averaged;
  const double threshold = cfg.clock_analysis.threshold.value_or(0.5 * depth);
  const ClassifierConfig classifier{{threshold}, cfg.clock_analysis.averaging_window};

  std::vector<double> signal = rec.signal;
  for (auto& v : signal) {
    if (!std::isfinite(v)) v = 0.0;
  }
  const auto jumps = detect_jumps(signal, classifier);

  // per-window accuracy; S0 (class 1, bright modulation) vs P0 (class 0)
  std::size_t correct = 0;
  std::size_t counted = 0;
  if (classifier.averaging_window == 1) {
    for (std::size_t i = 0; i < signal.size(); ++i) {
      const int expected = rec.true_state[i] == kClockS0 ? 1 : 0;
      correct += classify_value(signal[i], classifier.thresholds) == expected;
      ++counted;
    }
  }
  json summary{{"threshold", threshold}, {"s0_modulation_depth", depth}};
  summary["window_accuracy"] = counted ? json(static_cast<double>(correct) / static_cast<double>(counted)) : json(nullptr);
  write_histogram_outputs(out, rec, jumps, cfg.clock_analysis.histogram_bin_width, 3.0, summary);
  out.write_json("summary.json", summary);
}

void run_zeeman_jumps(const RunConfig& cfg, unsigned workers, OutputDir& out) {
  const auto zc = cfg.zeeman_config();
  const DetectionMap map = predicted_levels(zc);
  const TrajectoryRecord rec = simulate_zeeman(zc, cfg.seed, workers);
  const LevelClassifier lc = level_classifier(map);
  const ClassifierConfig classifier{lc.thresholds, cfg.zeeman_analysis.averaging_window};
  const auto jumps = detect_jumps(rec.signal, classifier);

  CsvTable levels({"m", "beta", "p_down", "level_counts"});
  for (const auto m : ZeemanLabel::all()) {
    const auto i = static_cast<std::size_t>(m.index());
    levels.row({m.str(), format_number(map.beta[i]), format_number(map.p_down[i]), format_number(map.levels[i])});
  }
  out.write("levels.csv", levels.str());

  const double duration = static_cast<double>(rec.times.size()) * rec.window_duration;
  json summary{{"thresholds", lc.thresholds},
               {"distinguishable_levels", lc.thresholds.size() + 1},
               {"seconds_per_cycle", zc.seconds_per_cycle()},
               {"configured_jump_probability_per_cycle", zc.p_jump_per_cycle}};
  summary["detected_jump_rate_per_s"] = duration > 0 ? json(static_cast<double>(jumps.size()) / duration) : json(nullptr);
  write_histogram_outputs(out, rec, jumps, cfg.zeeman_analysis.histogram_bin_width, cfg.zeeman_analysis.prominence_sigmas,
                          summary);
  out.write_json("summary.json", summary);
}

void run_nmr_scan(const RunConfig& cfg, unsigned workers, OutputDir& out) {
  const DetectionMap map = predicted_levels(cfg.zeeman_config());
  const auto times = linspace(0.0, cfg.nmr.t_max, cfg.nmr_scan.n_points);
  const double depump = cfg.nmr_scan.depump_probability;
  std::vector<ResonanceCurve> curves;
  std::vector<double> detunings;
  for (std::size_t c = 0; c < cfg.nmr_scan.detuning_ratios.size(); ++c) {
    NmrConfig nc = cfg.nmr;
    nc.delta_B = cfg.nmr_scan.detuning_ratios[c] * nc.omega_B_rabi;
    const MonteCarloSampling sampling{cfg.nmr_scan.cycles_per_point, sub_seed(cfg.seed, c), workers};
    curves.push_back(resonance_curve(nc, times, map, sampling, depump));
    detunings.push_back(nc.delta_B);
  }
  out.write("nmr_curves.csv", resonance_csv(curves, detunings));

  json fit_json{{"omega_B_true", cfg.nmr.omega_B_rabi}, {"curves", json::array()}};
  for (std::size_t c = 0; c < curves.size(); ++c) {
    std::vector<SignalPoint> pts;
    for (std::size_t i = 0; i < curves[c].times.size(); ++i) {
      pts.push_back({curves[c].times[i], curves[c].mc_signal[i], curves[c].mc_err[i]});
    }
    json entry{{"delta_B", detunings[c]}, {"reduced_chi2_vs_model", reduced_chi2(pts, curves[c].expected)}};
    if (detunings[c] == 0.0) {
      try {
        const RabiFit fit = fit_rabi_rate(pts, map, depump);
        entry.update({{"omega_B_fit", fit.omega_B}, {"omega_B_sigma", finite_or_null(fit.sigma)},
                      {"fit_chi2", fit.chi2}, {"fit_dof", fit.dof}});
      } catch (const NonIdentifiableError& e) {
        entry["fit_error"] = e.what();
      }
    }
    fit_json["curves"].push_back(entry);
  }
  out.write_json("fit.json", fit_json);
}

void run_fidelity_sweep(const RunConfig& cfg, unsigned workers, OutputDir& out) {
  const auto base = cfg.clock_config();
  const auto& f = cfg.fidelity;
  struct Point {
    std::string sweep;
    double time;
    double rate;
  };
  std::vector<Point> points;
  for (double t : f.integration_times) points.push_back({"integration_time", t, base.fluorescence.mean_rate});
  for (double r : f.mean_rates) points.push_back({"mean_rate", f.integration_time, r});

  CsvTable csv({"sweep", "integration_time_s", "mean_rate", "threshold", "balanced_fidelity", "pooled_accuracy",
                "error_s0", "error_p0"});
  for (std::size_t k = 0; k < points.size(); ++k) {
    auto c = base;
    c.fluorescence.mean_rate = points[k].rate;
    const std::uint64_t seed = sub_seed(cfg.seed, k);
    const auto s0 = clock_window_estimates(kClockS0, f.trials, points[k].time, c, seed, workers);
    const auto p0 = clock_window_estimates(kClockP0, f.trials, points[k].time, c, seed, workers);
    const FidelityResult r = f.threshold ? detection_fidelity(s0, p0, *f.threshold) : best_threshold_fidelity(s0, p0);
    csv.row({points[k].sweep, format_number(points[k].time), format_number(points[k].rate), format_number(r.threshold),
             format_number(r.balanced), format_number(r.pooled_accuracy), format_number(r.error_high),
             format_number(r.error_low)});
  }
  out.write("fidelity_sweep.csv", csv.str());
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, unsigned workers, std::optional<std::filesystem::path> output_override) {
  const auto problems = cfg.violations();
  if (!problems.empty()) throw ConfigError(problems.front());
  workers = std::max(1u, workers);

  const auto start = std::chrono::steady_clock::now();
  OutputDir out(output_override.value_or(cfg.output_dir));
  switch (cfg.experiment) {
    case Experiment::beta_table: run_beta_table(cfg, out); break;
    case Experiment::rsb_calibrate: run_rsb_calibrate(cfg, out); break;
    case Experiment::clock_detect: run_clock_detect(cfg, workers, out); break;
    case Experiment::zeeman_jumps: run_zeeman_jumps(cfg, workers, out); break;
    case Experiment::nmr_scan: run_nmr_scan(cfg, workers, out); break;
    case Experiment::fidelity_sweep: run_fidelity_sweep(cfg, workers, out); break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunResult result;
  result.output_dir = out.root();
  result.data_files = out.written();
  json files = json::object();
  for (const auto& name : result.data_files) files[name] = sha256_file(out.path_for(name));
  result.manifest = {{"experiment", to_string(cfg.experiment)},
                     {"seed", cfg.seed},
                     {"version", IONDETECT_VERSION},
                     {"libraries",
                      {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)}}},
                     {"workers", workers},
                     {"wall_time_s", wall},
                     {"config", to_json(cfg)},
                     {"files_sha256", files}};
  out.write_json("manifest.json", result.manifest);
  return result;
}

}  // namespace iondetect
