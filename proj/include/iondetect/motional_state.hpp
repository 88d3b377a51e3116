#pragma once

// Truncated Fock-space populations of the probed motional mode and the
// red-sideband readout of the control-ion qubit.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iondetect/constants.hpp"

namespace iondetect {

/// Tail mass a constructor may leave outside the truncated basis.
inline constexpr double kFockTailTolerance = 1e-9;

/// Number-state populations p(n), n = 0 .. n_max.
class FockDistribution {
 public:
  /// Throws DomainError on negative entries or mass above 1, and
  /// TruncationError when more than kFockTailTolerance is missing.
  explicit FockDistribution(std::vector<double> probs);

  std::size_t n_max() const { return probs_.size() - 1; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t n) const { return n < probs_.size() ? probs_[n] : 0.0; }
  std::span<const double> probs() const { return probs_; }
  double total() const;
  double mean() const;

 private:
  std::vector<double> probs_;
};

struct SidebandConfig {
  double omega1 = constants::two_pi * 0.07e6;  // RSB Rabi rate for n = 1, rad/s
  double t_rsb = 2.8e-6;
  /// Lamb-Dicke parameter of the sideband beams. Zero keeps the
  /// Omega_n = Omega_1 sqrt(n) law; a positive value switches to the
  /// full Laguerre matrix elements.
  double exact_eta = 0.0;

  std::vector<std::string> violations() const;
};

/// Poisson populations exp(-b^2) b^(2n) / n!. With no n_max the smallest
/// order whose tail mass is below kFockTailTolerance is used.
FockDistribution coherent_distribution(double beta, std::optional<std::size_t> n_max = std::nullopt);

/// Geometric populations nbar^n / (1 + nbar)^(n+1).
FockDistribution thermal_distribution(double nbar, std::optional<std::size_t> n_max = std::nullopt);

/// Diagonal of D(beta) rho_th D(beta)^dagger. D is built by matrix
/// exponential in a basis padded by 4 ceil(beta^2) + 20 levels beyond the
/// returned order. Throws TruncationError when an explicit n_max leaves
/// more than kFockTailTolerance outside.
FockDistribution displaced_thermal(double beta, double nbar,
                                   std::optional<std::size_t> n_max = std::nullopt);

/// Ratio Omega_n / Omega_1 under the configured coupling law (0 for n = 0).
double rsb_rate_factor(std::size_t n, double exact_eta);

/// Sum_n p(n) cos^2(Omega_n t_rsb), evaluated as 1 - Sum_n p(n) sin^2 so
/// that any truncated tail mass counts as unflipped.
double rsb_population(const FockDistribution& dist, const SidebandConfig& cfg);

/// Derivative of rsb_population(coherent(beta)) with respect to beta.
double rsb_population_dbeta(double beta, const SidebandConfig& cfg);

std::vector<double> rsb_flopping_curve(const FockDistribution& dist, double omega1,
                                       std::span<const double> times, double exact_eta = 0.0);

struct RsbObservation {
  double t = 0.0;       // s
  double p_down = 0.0;  // observed |down> fraction
  long trials = 0;

  double successes() const { return p_down * static_cast<double>(trials); }
};

struct BetaFit {
  double beta = 0.0;
  double sigma = 0.0;   // from the likelihood curvature
  double lower = 0.0;   // 68% interval
  double upper = 0.0;
  double log_likelihood = 0.0;
};

/// Maximum-likelihood coherent amplitude under binomial sampling of the
/// RSB population. Needs at least five points with trials >= 1.
/// Throws NonIdentifiableError when every observed fraction is the same
/// (unless they are all 1, which only beta = 0 explains).
BetaFit fit_coherent_beta(std::span<const RsbObservation> curve, double omega1,
                          double beta_max = 8.0);

}  // namespace iondetect
