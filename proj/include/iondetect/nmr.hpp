#pragma once

// Spin-5/2 magnetic resonance in the rotating-wave frame,
//
//     H / hbar = -Delta_B J_z + Omega_B J_x,
//
// integrated with a fixed-step fourth-order Gauss-Legendre scheme (the
// (2,2) Pade propagator, unitary for Hermitian H), and composed with the
// Zeeman detection map into expected fluorescence curves.
//
// Omega_B is the spin-1/2-equivalent Rabi rate: a stretched state is fully
// inverted at Omega_B t = pi on resonance.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iondetect/atomic_core.hpp"
#include "iondetect/constants.hpp"
#include "iondetect/trajectory.hpp"

namespace iondetect {

using SpinMatrix = Eigen::Matrix<std::complex<double>, 6, 6>;
using SpinVector = Eigen::Matrix<std::complex<double>, 6, 1>;
using Populations = std::array<double, ZeemanLabel::kCount>;

inline constexpr double kSpinNormTolerance = 1e-9;

/// Amplitudes over m = -5/2 .. +5/2 (index as ZeemanLabel::index()).
struct SpinState {
  SpinVector amplitudes = SpinVector::Zero();

  static SpinState basis(ZeemanLabel m);
  double norm2() const { return amplitudes.squaredNorm(); }
  Populations populations() const;
};

struct NmrConfig {
  double omega_B_rabi = constants::two_pi * 1.0e3;  // rad/s
  double delta_B = 0.0;                             // omega_B - omega_0B, rad/s
  double t_max = 2.0e-3;
  double dt = 1.0e-6;

  /// Largest dt accepted: (1/50) 2 pi / max(Omega_B, |Delta_B|).
  double max_step() const;
  std::vector<std::string> violations() const;
  void validate() const;
};

SpinMatrix spin_jz();
SpinMatrix spin_jx();

/// -Delta_B J_z + Omega_B J_x in rad/s.
SpinMatrix rwa_hamiltonian(const NmrConfig& cfg);

/// Integrates i dc/dt = H c over [0, t]. cfg.dt is the coarsest step; the
/// step is further limited to keep |H| h <= 0.02. Throws ConfigError if the
/// step bound is violated and DomainError for an unnormalised state.
SpinState evolve(const SpinState& state, const NmrConfig& cfg, double t);

/// Populations at each of the ascending times, from one pass of the integrator.
std::vector<Populations> evolve_populations(const SpinState& state, const NmrConfig& cfg,
                                            std::span<const double> times);

struct MonteCarloSampling {
  std::size_t cycles_per_point = 200;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct ResonanceCurve {
  std::vector<double> times;
  std::vector<double> expected;
  std::vector<double> mc_signal;  // empty without sampling
  std::vector<double> mc_err;
};

/// Expected readout of a spin started in |5/2> after each drive duration.
/// depump_probability moves the spin to a random other level before the
/// readout with that probability.
ResonanceCurve resonance_curve(const NmrConfig& cfg, std::span<const double> times, const DetectionMap& detection,
                               std::optional<MonteCarloSampling> sampling = std::nullopt,
                               double depump_probability = 0.0);

struct SignalPoint {
  double t = 0.0;
  double signal = 0.0;
  double sigma = 0.0;  // <= 0 means unweighted
};

struct RabiFit {
  double omega_B = 0.0;
  double sigma = 0.0;
  double chi2 = 0.0;
  std::size_t dof = 0;
};

/// Least-squares Omega_B from a resonant (Delta_B = 0) curve. Needs at
/// least 8 points. Throws NonIdentifiableError on flat data.
RabiFit fit_rabi_rate(std::span<const SignalPoint> observed, const DetectionMap& detection,
                      double depump_probability = 0.0);

/// Sum of squared normalised residuals against a model curve, divided by
/// the point count.
double reduced_chi2(std::span<const SignalPoint> observed, std::span<const double> model, std::size_t fitted_params = 0);

}  // namespace iondetect
