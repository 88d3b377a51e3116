#include "iondetect/fluorescence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iondetect/errors.hpp"

namespace iondetect {

namespace {

// Thinned inhomogeneous Poisson arrivals over [t_start, t_start + duration).
// `flip` is the physical phase offset of the modulation; folding adds it
// back, which is the electronic compensation.
void accumulate_pulse(double t_start, double duration, double depth, double flip,
                      const FluorescenceConfig& cfg, Rng& rng, BinnedCounts& out) {
  if (duration <= 0.0 || cfg.mean_rate <= 0.0) return;
  const double majorant = cfg.mean_rate * (1.0 + depth);
  std::poisson_distribution<std::int64_t> n_dist(majorant * duration);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::int64_t candidates = n_dist(rng);
  const double bin_width = constants::two_pi / cfg.n_bins;
  for (std::int64_t i = 0; i < candidates; ++i) {
    const double t = t_start + duration * unit(rng);
    const double motion = cfg.omega_M * t;
    const double accept = (1.0 + depth * std::cos(motion - cfg.phi_M + flip)) / (1.0 + depth);
    if (unit(rng) >= accept) continue;
    double theta = std::fmod(motion + flip, constants::two_pi);
    if (theta < 0.0) theta += constants::two_pi;
    auto bin = static_cast<int>(theta / bin_width);
    bin = std::min(bin, cfg.n_bins - 1);
    ++out.counts[static_cast<std::size_t>(bin)];
  }
}

}  // namespace

std::vector<std::string> FluorescenceConfig::violations() const {
  std::vector<std::string> out;
  if (n_bins < 4) out.emplace_back("n_bins: must be >= 4");
  if (!(mean_rate >= 0.0)) out.emplace_back("mean_rate: must be >= 0");
  if (!(t_blue >= 0.0)) out.emplace_back("t_blue: must be >= 0");
  if (!(t_red >= 0.0)) out.emplace_back("t_red: must be >= 0");
  if (!(gain_red <= 1.0 && 1.0 <= gain_blue)) out.emplace_back("gain_red/gain_blue: need gain_red <= 1 <= gain_blue");
  if (!(gain_red >= 0.0)) out.emplace_back("gain_red: must be >= 0");
  if (!(omega_M > 0.0)) out.emplace_back("omega_M: must be > 0");
  if (!(mod_depth_per_unit_amp >= 0.0)) out.emplace_back("mod_depth_per_unit_amp: must be >= 0");
  return out;
}

void FluorescenceConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) throw ConfigError("FluorescenceConfig." + v.front());
}

std::int64_t BinnedCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

BinnedCounts& BinnedCounts::operator+=(const BinnedCounts& other) {
  if (counts.empty()) {
    counts.assign(other.counts.size(), 0);
    phase_reference = other.phase_reference;
  }
  if (counts.size() != other.counts.size()) throw DomainError("BinnedCounts: bin count mismatch");
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  total_duration += other.total_duration;
  return *this;
}

double modulation_depth(double beta, const FluorescenceConfig& cfg) {
  if (!(beta >= 0.0)) throw DomainError("modulation_depth: beta must be >= 0");
  return std::min(1.0, cfg.mod_depth_per_unit_amp * beta);
}

double amplitude_evolution(double beta, Pulse pulse, const FluorescenceConfig& cfg) {
  if (!(beta >= 0.0)) throw DomainError("amplitude_evolution: beta must be >= 0");
  return beta * (pulse == Pulse::blue ? cfg.gain_blue : cfg.gain_red);
}

PulseDepths sequence_depths(double beta_initial, const FluorescenceConfig& cfg) {
  const double after_blue = amplitude_evolution(beta_initial, Pulse::blue, cfg);
  const double after_red = amplitude_evolution(after_blue, Pulse::red, cfg);
  PulseDepths d;
  d.blue = modulation_depth(after_blue, cfg);
  d.red = modulation_depth(after_red, cfg);
  const double total = cfg.t_blue + cfg.t_red;
  d.time_averaged = total > 0.0 ? (cfg.t_blue * d.blue + cfg.t_red * d.red) / total : 0.0;
  return d;
}

double calibrate_kappa(double beta, double target_depth, const FluorescenceConfig& cfg) {
  const double total = cfg.t_blue + cfg.t_red;
  const double weighted = cfg.t_blue * cfg.gain_blue + cfg.t_red * cfg.gain_blue * cfg.gain_red;
  if (!(beta > 0.0) || !(weighted > 0.0) || !(total > 0.0)) {
    throw DomainError("calibrate_kappa: need beta > 0 and a nonempty sequence");
  }
  return target_depth * total / (beta * weighted);
}

BinnedCounts simulate_sequence(double beta_initial, const FluorescenceConfig& cfg, Rng& rng) {
  BinnedCounts out;
  out.counts.assign(static_cast<std::size_t>(cfg.n_bins), 0);
  out.total_duration = cfg.t_blue + cfg.t_red;
  out.phase_reference = cfg.phi_M;
  const PulseDepths depths = sequence_depths(beta_initial, cfg);
  accumulate_pulse(0.0, cfg.t_blue, depths.blue, 0.0, cfg, rng, out);
  const double red_flip = cfg.red_phase_flip ? constants::pi : 0.0;
  accumulate_pulse(cfg.t_blue, cfg.t_red, depths.red, red_flip, cfg, rng, out);
  return out;
}

BinnedCounts simulate_constant_depth(double depth, double duration, const FluorescenceConfig& cfg,
                                     Rng& rng) {
  if (!(depth >= 0.0 && depth <= 1.0)) throw DomainError("simulate_constant_depth: depth must lie in [0, 1]");
  BinnedCounts out;
  out.counts.assign(static_cast<std::size_t>(cfg.n_bins), 0);
  out.total_duration = duration;
  out.phase_reference = cfg.phi_M;
  accumulate_pulse(0.0, duration, depth, 0.0, cfg, rng, out);
  return out;
}

}  // namespace iondetect
