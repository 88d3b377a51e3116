#include "iondetect/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iondetect/errors.hpp"
#include "iondetect/estimators.hpp"
#include "iondetect/parallel.hpp"
#include "iondetect/rng.hpp"

namespace iondetect {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

template <typename T>
int majority(const std::vector<T>& states, std::size_t begin, std::size_t end) {
  // ties go to the most recent state
  std::vector<std::pair<int, std::size_t>> tally;
  for (std::size_t i = begin; i < end; ++i) {
    const int s = static_cast<int>(states[i]);
    auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& p) { return p.first == s; });
    if (it == tally.end()) {
      tally.emplace_back(s, 1);
    } else {
      ++it->second;
    }
  }
  int best = static_cast<int>(states[end - 1]);
  std::size_t best_count = 0;
  for (const auto& [s, n] : tally) {
    if (n > best_count || (n == best_count && s == static_cast<int>(states[end - 1]))) {
      best = s;
      best_count = n;
    }
  }
  return best;
}

double demodulate_or_zero(const BinnedCounts& counts, double phase) {
  return counts.total() > 0 ? demodulate(counts, phase) : 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Clock

std::size_t ClockTrajectoryConfig::sequences_per_window() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(averaging_time / sequence_time)));
}

std::vector<std::string> ClockTrajectoryConfig::violations() const {
  std::vector<std::string> out;
  if (!is_probability(p_drive)) out.emplace_back("p_drive: must lie in [0, 1]");
  if (!(pulse_period > 0.0)) out.emplace_back("pulse_period: must be > 0");
  if (!(p0_lifetime > 0.0)) out.emplace_back("p0_lifetime: must be > 0");
  if (!(sequence_time > 0.0)) out.emplace_back("sequence_time: must be > 0");
  if (!(total_time > 0.0)) out.emplace_back("total_time: must be > 0");
  if (!(averaging_time > 0.0)) out.emplace_back("averaging_time: must be > 0");
  if (!(beta_s0 >= 0.0)) out.emplace_back("beta_s0: must be >= 0");
  if (initial_state != kClockS0 && initial_state != kClockP0) out.emplace_back("initial_state: must be 0 (S0) or 1 (P0)");
  if (sequence_time > 0.0 && sequence_time < fluorescence.t_blue + fluorescence.t_red) {
    out.emplace_back("sequence_time: shorter than t_blue + t_red");
  }
  for (const auto& v : fluorescence.violations()) out.push_back("fluorescence." + v);
  return out;
}

void ClockTrajectoryConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) throw ConfigError("ClockTrajectoryConfig." + v.front());
}

TrajectoryRecord simulate_clock(const ClockTrajectoryConfig& cfg, std::uint64_t seed, unsigned workers) {
  cfg.validate();
  const auto n_seq = static_cast<std::size_t>(std::floor(cfg.total_time / cfg.sequence_time + 1e-9));
  const std::size_t per_window = cfg.sequences_per_window();
  const std::size_t n_windows = n_seq / per_window;

  TrajectoryRecord rec;
  rec.window_duration = static_cast<double>(per_window) * cfg.sequence_time;

  // Hidden chain: continuous-time decay, pulses on a fixed grid.
  Rng chain = derive_stream(seed, stream::hidden_chain);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double never = std::numeric_limits<double>::infinity();
  const bool decays = std::isfinite(cfg.p0_lifetime);
  std::exponential_distribution<double> lifetime(decays ? 1.0 / cfg.p0_lifetime : 1.0);

  int state = cfg.initial_state;
  double next_pulse = cfg.pulse_period;
  double next_decay = (state == kClockP0 && decays) ? lifetime(chain) : never;
  std::vector<std::uint8_t> states(n_windows * per_window);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double t = static_cast<double>(i) * cfg.sequence_time;
    while (std::min(next_pulse, next_decay) <= t) {
      if (next_decay <= next_pulse) {
        rec.events.push_back({next_decay, i, kClockP0, kClockS0, "decay"});
        state = kClockS0;
        next_decay = never;
        continue;
      }
      const double pulse_time = next_pulse;
      next_pulse += cfg.pulse_period;
      const double u = unit(chain);
      const double decay_draw = decays ? lifetime(chain) : never;
      if (u >= cfg.p_drive) continue;
      if (state == kClockS0) {
        state = kClockP0;
        next_decay = pulse_time + decay_draw;
        rec.events.push_back({pulse_time, i, kClockS0, kClockP0, "drive"});
      } else {
        state = kClockS0;
        next_decay = never;
        rec.events.push_back({pulse_time, i, kClockP0, kClockS0, "drive"});
      }
    }
    states[i] = static_cast<std::uint8_t>(state);
  }

  rec.times.resize(n_windows);
  rec.true_state.resize(n_windows);
  rec.signal.resize(n_windows);
  parallel_for(n_windows, workers, [&](std::size_t w) {
    BinnedCounts pooled;
    const std::size_t begin = w * per_window;
    for (std::size_t i = begin; i < begin + per_window; ++i) {
      Rng rng = derive_stream(seed, stream::sequence_photons, i);
      const double beta = states[i] == kClockS0 ? cfg.beta_s0 : 0.0;
      pooled += simulate_sequence(beta, cfg.fluorescence, rng);
    }
    rec.times[w] = static_cast<double>(begin) * cfg.sequence_time;
    rec.true_state[w] = majority(states, begin, begin + per_window);
    rec.signal[w] = pooled.total() > 0 ? demodulate(pooled, cfg.fluorescence.phi_M)
                                       : std::numeric_limits<double>::quiet_NaN();
  });
  return rec;
}

std::vector<double> clock_window_estimates(int state, std::size_t n_trials, double integration_time,
                                           const ClockTrajectoryConfig& cfg, std::uint64_t seed,
                                           unsigned workers) {
  cfg.validate();
  if (!(integration_time > 0.0)) throw ConfigError("clock_window_estimates: integration_time must be > 0");
  const auto n_seq = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(integration_time / cfg.sequence_time + 1e-9)));
  const double beta = state == kClockS0 ? cfg.beta_s0 : 0.0;
  std::vector<double> out(n_trials);
  parallel_for(n_trials, workers, [&](std::size_t trial) {
    Rng rng = derive_stream(seed, stream::ensemble_trial, (static_cast<std::uint64_t>(trial) << 1) |
                                                              static_cast<std::uint64_t>(state & 1));
    BinnedCounts pooled;
    for (std::size_t i = 0; i < n_seq; ++i) pooled += simulate_sequence(beta, cfg.fluorescence, rng);
    out[trial] = demodulate_or_zero(pooled, cfg.fluorescence.phi_M);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Zeeman

std::vector<std::string> ZeemanReadoutConfig::violations() const {
  std::vector<std::string> out;
  for (const auto& v : sideband.violations()) out.push_back("sideband." + v);
  if (!(nbar >= 0.0)) out.emplace_back("nbar: must be >= 0");
  if (!(bright_rate >= 0.0)) out.emplace_back("bright_rate: must be >= 0");
  if (!(dark_rate >= 0.0)) out.emplace_back("dark_rate: must be >= 0");
  if (!(detect_duration >= 0.0)) out.emplace_back("detect_duration: must be >= 0");
  return out;
}

double ZeemanTrajectoryConfig::seconds_per_cycle() const {
  return cycle_time_is_per_point ? cycle_time / static_cast<double>(cycles_per_point) : cycle_time;
}

std::array<double, ZeemanLabel::kCount> ZeemanTrajectoryConfig::depump_probabilities() const {
  if (p_raman_depump) return *p_raman_depump;
  // off-resonant scattering rate ~ (Omega C_m)^2 / Delta_m^2
  std::array<double, ZeemanLabel::kCount> weight{};
  for (const auto m : ZeemanLabel::all()) {
    const double c = clebsch_gordan_stretched(ZeemanLabel::kTwiceSpin, m.twice());
    const double d = zeeman_detuning(m, drive);
    weight[static_cast<std::size_t>(m.index())] = c * c / (d * d);
  }
  const double ref = weight[static_cast<std::size_t>(ZeemanLabel::from_twice(3).index())];
  std::array<double, ZeemanLabel::kCount> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(1.0, depump_reference * weight[i] / ref);
  return out;
}

std::vector<std::string> ZeemanTrajectoryConfig::violations() const {
  std::vector<std::string> out;
  if (!is_probability(p_jump_per_cycle)) out.emplace_back("p_jump_per_cycle: must lie in [0, 1]");
  if (!is_probability(jump_kernel[0]) || !is_probability(jump_kernel[1]) ||
      std::abs(jump_kernel[0] + jump_kernel[1] - 1.0) > 1e-12) {
    out.emplace_back("jump_kernel: entries must be probabilities summing to 1");
  }
  if (p_raman_depump) {
    for (double p : *p_raman_depump) {
      if (!is_probability(p)) {
        out.emplace_back("p_raman_depump: entries must lie in [0, 1]");
        break;
      }
    }
  }
  if (!is_probability(depump_reference)) out.emplace_back("depump_reference: must lie in [0, 1]");
  if (!(cycle_time > 0.0)) out.emplace_back("cycle_time: must be > 0");
  if (cycles_per_point < 1) out.emplace_back("cycles_per_point: must be >= 1");
  if (!(total_time > 0.0)) out.emplace_back("total_time: must be > 0");
  if (initial_twice_m && (std::abs(*initial_twice_m) > 5 || *initial_twice_m % 2 == 0)) {
    out.emplace_back("initial_twice_m: must be an odd integer in [-5, 5]");
  }
  if (beta_anchor && !(*beta_anchor >= 0.0)) out.emplace_back("beta_anchor: must be >= 0");
  for (const auto& v : drive.violations()) out.push_back("drive." + v);
  for (const auto& v : readout.violations()) out.push_back("readout." + v);
  return out;
}

void ZeemanTrajectoryConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) throw ConfigError("ZeemanTrajectoryConfig." + v.front());
}

DetectionMap predicted_levels(const ZeemanTrajectoryConfig& cfg) {
  cfg.drive.validate();
  const auto table = beta_table(cfg.drive, cfg.beta_anchor);
  DetectionMap map;
  map.bright_mean = cfg.readout.bright_rate * cfg.readout.detect_duration;
  map.dark_mean = cfg.readout.dark_rate * cfg.readout.detect_duration;
  for (std::size_t i = 0; i < table.size(); ++i) {
    map.beta[i] = table[i].beta;
    const auto dist = displaced_thermal(table[i].beta, cfg.readout.nbar);
    map.p_down[i] = rsb_population(dist, cfg.readout.sideband);
    map.levels[i] = map.p_down[i] * map.bright_mean + (1.0 - map.p_down[i]) * map.dark_mean;
  }
  return map;
}

TrajectoryRecord simulate_zeeman(const ZeemanTrajectoryConfig& cfg, std::uint64_t seed, unsigned workers) {
  cfg.validate();
  const DetectionMap map = predicted_levels(cfg);
  const auto depump = cfg.depump_probabilities();
  const double dt = cfg.seconds_per_cycle();
  const std::size_t per_point = cfg.cycles_per_point;
  const auto n_points = static_cast<std::size_t>(std::floor(cfg.total_time / dt + 1e-9)) / per_point;
  const std::size_t n_cycles = n_points * per_point;

  TrajectoryRecord rec;
  rec.window_duration = static_cast<double>(per_point) * dt;

  Rng chain = derive_stream(seed, stream::hidden_chain);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int index = cfg.initial_twice_m ? ZeemanLabel::from_twice(*cfg.initial_twice_m).index()
                                  : std::min(5, static_cast<int>(unit(chain) * 6.0));
  std::vector<std::uint8_t> levels(n_cycles);
  for (std::size_t c = 0; c < n_cycles; ++c) {
    // fixed number of draws per cycle keeps the chain aligned across configs
    const double u_jump = unit(chain);
    const double u_dir = unit(chain);
    const double u_depump = unit(chain);
    const double u_dest = unit(chain);
    const double t = static_cast<double>(c) * dt;

    if (u_jump < cfg.p_jump_per_cycle) {
      int step = u_dir < cfg.jump_kernel[0] ? -1 : +1;
      if (index == 0) step = +1;
      if (index == ZeemanLabel::kCount - 1) step = -1;
      const int to = index + step;
      rec.events.push_back({t, c, 2 * index - 5, 2 * to - 5, "raman"});
      index = to;
    }
    if (u_depump < depump[static_cast<std::size_t>(index)]) {
      // sigma+ excitation then decay: m -> m+1 or m+2 within the manifold
      const int reachable = std::min(2, ZeemanLabel::kCount - 1 - index);
      if (reachable > 0) {
        const int to = index + 1 + std::min(reachable - 1, static_cast<int>(u_dest * reachable));
        rec.events.push_back({t, c, 2 * index - 5, 2 * to - 5, "depump"});
        index = to;
      }
    }
    levels[c] = static_cast<std::uint8_t>(index);
  }

  rec.times.resize(n_points);
  rec.true_state.resize(n_points);
  rec.signal.resize(n_points);
  parallel_for(n_points, workers, [&](std::size_t p) {
    Rng rng = derive_stream(seed, stream::zeeman_readout, p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::poisson_distribution<long> bright(map.bright_mean > 0.0 ? map.bright_mean : 1.0);
    std::poisson_distribution<long> dark(map.dark_mean > 0.0 ? map.dark_mean : 1.0);
    const std::size_t begin = p * per_point;
    long total = 0;
    for (std::size_t c = begin; c < begin + per_point; ++c) {
      const bool down = u(rng) < map.p_down[levels[c]];
      if (down) {
        const long k = bright(rng);
        total += map.bright_mean > 0.0 ? k : 0;
      } else {
        const long k = dark(rng);
        total += map.dark_mean > 0.0 ? k : 0;
      }
    }
    rec.times[p] = static_cast<double>(begin) * dt;
    rec.true_state[p] = 2 * majority(levels, begin, begin + per_point) - 5;
    rec.signal[p] = static_cast<double>(total) / static_cast<double>(per_point);
  });
  return rec;
}

LevelClassifier level_classifier(const DetectionMap& map) {
  std::vector<int> order(ZeemanLabel::kCount);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return map.levels[static_cast<std::size_t>(a)] < map.levels[static_cast<std::size_t>(b)]; });
  LevelClassifier lc;
  lc.class_to_index.push_back(order[0]);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double lo = map.levels[static_cast<std::size_t>(order[k - 1])];
    const double hi = map.levels[static_cast<std::size_t>(order[k])];
    const double mid = 0.5 * (lo + hi);
    if (hi > lo && (lc.thresholds.empty() || mid > lc.thresholds.back())) {
      lc.thresholds.push_back(mid);
      lc.class_to_index.push_back(order[k]);
    }
  }
  return lc;
}

}  // namespace iondetect
