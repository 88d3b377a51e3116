#include "iondetect/nmr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "iondetect/errors.hpp"
#include "iondetect/parallel.hpp"
#include "iondetect/rng.hpp"

namespace iondetect {

namespace {

constexpr double kTwiceSpin = 5.0;
constexpr double kMaxPhasePerStep = 0.02;

// (2,2) Pade approximant of exp(-i H h).
SpinMatrix step_propagator(const SpinMatrix& hamiltonian, double h) {
  const SpinMatrix a = std::complex<double>(0.0, -h) * hamiltonian;
  const SpinMatrix a2 = a * a / 12.0;
  const SpinMatrix id = SpinMatrix::Identity();
  const SpinMatrix num = id + 0.5 * a + a2;
  const SpinMatrix den = id - 0.5 * a + a2;
  return den.partialPivLu().solve(num);
}

double spectral_radius(const NmrConfig& cfg) {
  return 0.5 * kTwiceSpin * std::hypot(cfg.omega_B_rabi, cfg.delta_B);
}

std::size_t steps_for(double duration, const NmrConfig& cfg) {
  if (duration <= 0.0) return 0;
  double h = cfg.dt;
  const double radius = spectral_radius(cfg);
  if (radius > 0.0) h = std::min(h, kMaxPhasePerStep / radius);
  return static_cast<std::size_t>(std::ceil(duration / h - 1e-12));
}

void require_normalised(const SpinState& s) {
  if (std::abs(s.norm2() - 1.0) > kSpinNormTolerance) {
    throw DomainError("evolve: spin state is not normalised");
  }
}

Populations depumped(const Populations& p, double q) {
  if (q <= 0.0) return p;
  Populations out{};
  for (std::size_t m = 0; m < p.size(); ++m) {
    out[m] += (1.0 - q) * p[m];
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k != m) out[k] += q * p[m] / (static_cast<double>(p.size()) - 1.0);
    }
  }
  return out;
}

double expected_signal(const Populations& p, const DetectionMap& map) {
  double s = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) s += p[m] * map.levels[m];
  return s;
}

}  // namespace

SpinState SpinState::basis(ZeemanLabel m) {
  SpinState s;
  s.amplitudes(m.index()) = 1.0;
  return s;
}

Populations SpinState::populations() const {
  Populations p{};
  for (int i = 0; i < 6; ++i) p[static_cast<std::size_t>(i)] = std::norm(amplitudes(i));
  return p;
}

double NmrConfig::max_step() const {
  const double scale = std::max({std::abs(omega_B_rabi), std::abs(delta_B), 1e-300});
  return constants::two_pi / (50.0 * scale);
}

std::vector<std::string> NmrConfig::violations() const {
  std::vector<std::string> out;
  if (!(dt > 0.0)) {
    out.emplace_back("dt: must be > 0");
  } else if (dt > max_step()) {
    out.emplace_back("dt: step " + std::to_string(dt) + " s exceeds the bound " + std::to_string(max_step()) +
                     " s set by omega_B_rabi/delta_B");
  }
  if (!(t_max >= 0.0)) out.emplace_back("t_max: must be >= 0");
  if (!std::isfinite(omega_B_rabi)) out.emplace_back("omega_B_rabi: must be finite");
  if (!std::isfinite(delta_B)) out.emplace_back("delta_B: must be finite");
  return out;
}

void NmrConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) throw ConfigError("NmrConfig." + v.front());
}

SpinMatrix spin_jz() {
  SpinMatrix jz = SpinMatrix::Zero();
  for (int i = 0; i < 6; ++i) jz(i, i) = 0.5 * (2 * i - 5);
  return jz;
}

SpinMatrix spin_jx() {
  SpinMatrix jx = SpinMatrix::Zero();
  const double ii1 = 0.5 * kTwiceSpin * (0.5 * kTwiceSpin + 1.0);
  for (int i = 0; i + 1 < 6; ++i) {
    const double m = 0.5 * (2 * i - 5);
    const double element = 0.5 * std::sqrt(ii1 - m * (m + 1.0));
    jx(i + 1, i) = element;
    jx(i, i + 1) = element;
  }
  return jx;
}

SpinMatrix rwa_hamiltonian(const NmrConfig& cfg) {
  return -cfg.delta_B * spin_jz() + cfg.omega_B_rabi * spin_jx();
}

SpinState evolve(const SpinState& state, const NmrConfig& cfg, double t) {
  cfg.validate();
  require_normalised(state);
  if (!(t >= 0.0)) throw DomainError("evolve: duration must be >= 0");
  const std::size_t n = steps_for(t, cfg);
  if (n == 0) return state;
  const SpinMatrix step = step_propagator(rwa_hamiltonian(cfg), t / static_cast<double>(n));
  SpinState out = state;
  for (std::size_t i = 0; i < n; ++i) out.amplitudes = step * out.amplitudes;
  return out;
}

std::vector<Populations> evolve_populations(const SpinState& state, const NmrConfig& cfg,
                                            std::span<const double> times) {
  cfg.validate();
  require_normalised(state);
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0)) {
    throw DomainError("evolve_populations: times must be ascending and >= 0");
  }
  const SpinMatrix h = rwa_hamiltonian(cfg);
  std::vector<Populations> out;
  out.reserve(times.size());
  SpinVector c = state.amplitudes;
  double now = 0.0;
  double cached_step = -1.0;
  SpinMatrix propagator;
  for (double t : times) {
    const std::size_t n = steps_for(t - now, cfg);
    if (n > 0) {
      const double step = (t - now) / static_cast<double>(n);
      if (step != cached_step) {
        propagator = step_propagator(h, step);
        cached_step = step;
      }
      for (std::size_t i = 0; i < n; ++i) c = propagator * c;
    }
    now = t;
    SpinState s;
    s.amplitudes = c;
    out.push_back(s.populations());
  }
  return out;
}

ResonanceCurve resonance_curve(const NmrConfig& cfg, std::span<const double> times, const DetectionMap& detection,
                               std::optional<MonteCarloSampling> sampling, double depump_probability) {
  if (!(depump_probability >= 0.0 && depump_probability <= 1.0)) {
    throw DomainError("resonance_curve: depump probability must lie in [0, 1]");
  }
  const auto pops = evolve_populations(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, times);
  ResonanceCurve curve;
  curve.times.assign(times.begin(), times.end());
  curve.expected.reserve(times.size());
  for (const auto& p : pops) curve.expected.push_back(expected_signal(depumped(p, depump_probability), detection));
  if (!sampling) return curve;

  const std::size_t n_cycles = std::max<std::size_t>(1, sampling->cycles_per_point);
  curve.mc_signal.resize(times.size());
  curve.mc_err.resize(times.size());
  parallel_for(times.size(), sampling->workers, [&](std::size_t i) {
    Rng rng = derive_stream(sampling->seed, stream::nmr_sampling, i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::poisson_distribution<long> bright(detection.bright_mean > 0.0 ? detection.bright_mean : 1.0);
    std::poisson_distribution<long> dark(detection.dark_mean > 0.0 ? detection.dark_mean : 1.0);
    const auto& p = pops[i];
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t c = 0; c < n_cycles; ++c) {
      const double u = unit(rng);
      std::size_t m = 0;
      double acc = p[0];
      while (m + 1 < p.size() && u >= acc) acc += p[++m];
      const double u_depump = unit(rng);
      const double u_dest = unit(rng);
      if (u_depump < depump_probability) {
        auto other = static_cast<std::size_t>(u_dest * 5.0);
        other = std::min<std::size_t>(other, 4);
        m = other >= m ? other + 1 : other;
      }
      const bool down = unit(rng) < detection.p_down[m];
      double counts = 0.0;
      if (down) {
        const long k = bright(rng);
        counts = detection.bright_mean > 0.0 ? static_cast<double>(k) : 0.0;
      } else {
        const long k = dark(rng);
        counts = detection.dark_mean > 0.0 ? static_cast<double>(k) : 0.0;
      }
      sum += counts;
      sum2 += counts * counts;
    }
    const double n = static_cast<double>(n_cycles);
    const double mean = sum / n;
    const double var = n > 1.0 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) : 0.0;
    curve.mc_signal[i] = mean;
    curve.mc_err[i] = std::sqrt(var / n);
  });
  return curve;
}

double reduced_chi2(std::span<const SignalPoint> observed, std::span<const double> model, std::size_t fitted_params) {
  if (observed.size() != model.size()) throw DomainError("reduced_chi2: size mismatch");
  if (observed.size() <= fitted_params) throw DomainError("reduced_chi2: no degrees of freedom");
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double r = observed[i].signal - model[i];
    const double s = observed[i].sigma > 0.0 ? observed[i].sigma : 1.0;
    chi2 += r * r / (s * s);
  }
  return chi2 / static_cast<double>(observed.size() - fitted_params);
}

RabiFit fit_rabi_rate(std::span<const SignalPoint> observed, const DetectionMap& detection,
                      double depump_probability) {
  if (observed.size() < 8) throw DomainError("fit_rabi_rate: need at least 8 time points");
  std::vector<SignalPoint> pts(observed.begin(), observed.end());
  std::sort(pts.begin(), pts.end(), [](const SignalPoint& a, const SignalPoint& b) { return a.t < b.t; });
  const auto [lo_it, hi_it] = std::minmax_element(pts.begin(), pts.end(), [](const SignalPoint& a, const SignalPoint& b) {
    return a.signal < b.signal;
  });
  const double scale = std::max(1.0, std::abs(hi_it->signal));
  if (hi_it->signal - lo_it->signal <= 1e-12 * scale) {
    throw NonIdentifiableError("fit_rabi_rate: flat data carry no Rabi-rate information");
  }
  const double span = pts.back().t - pts.front().t;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double gap = pts[i].t - pts[i - 1].t;
    if (gap > 0.0) min_gap = std::min(min_gap, gap);
  }
  if (!(span > 0.0) || !std::isfinite(min_gap)) throw NonIdentifiableError("fit_rabi_rate: no time span");

  std::vector<double> times;
  times.reserve(pts.size());
  for (const auto& p : pts) times.push_back(p.t);

  auto chi2 = [&](double omega) {
    NmrConfig cfg;
    cfg.omega_B_rabi = omega;
    cfg.delta_B = 0.0;
    cfg.dt = cfg.max_step();
    const auto pops = evolve_populations(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, times);
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double model = expected_signal(depumped(pops[i], depump_probability), detection);
      const double s = pts[i].sigma > 0.0 ? pts[i].sigma : 1.0;
      const double r = (pts[i].signal - model) / s;
      acc += r * r;
    }
    return acc;
  };

  // Log grid from a half-period span to the sampling limit, then Brent.
  const double omega_lo = 0.5 * constants::pi / span;
  const double omega_hi = constants::pi / min_gap;
  constexpr int grid = 400;
  const double ratio = std::pow(omega_hi / omega_lo, 1.0 / (grid - 1));
  double best_omega = omega_lo;
  double best = chi2(omega_lo);
  for (int k = 1; k < grid; ++k) {
    const double w = omega_lo * std::pow(ratio, k);
    const double c = chi2(w);
    if (c < best) {
      best = c;
      best_omega = w;
    }
  }
  const auto [omega_hat, chi2_hat] =
      boost::math::tools::brent_find_minima(chi2, best_omega / ratio, best_omega * ratio, 26);

  RabiFit fit;
  fit.omega_B = chi2_hat <= best ? omega_hat : best_omega;
  fit.chi2 = std::min(chi2_hat, best);
  fit.dof = pts.size() - 1;
  const double h = 1e-4 * fit.omega_B;
  const double curvature = (chi2(fit.omega_B + h) - 2.0 * fit.chi2 + chi2(fit.omega_B - h)) / (h * h);
  fit.sigma = curvature > 0.0 ? std::sqrt(2.0 / curvature) : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace iondetect
