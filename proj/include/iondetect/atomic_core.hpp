#pragma once

// Static atomic and laser physics of the state-dependent dipole force:
// stretched-coupling Clebsch-Gordan weights, Zeeman-shifted detunings,
// the Lamb-Dicke parameter and the coherent-amplitude map
//
//     |beta(m)| = eta * t_d * (Omega0' * C_m)^2 / |Delta_m|.
//
// Half-integer quantum numbers are passed doubled (two_j = 5 for j = 5/2).

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "iondetect/constants.hpp"

namespace iondetect {

/// Zeeman sublevel |I = 5/2, m> of the spectroscopy ion.
class ZeemanLabel {
 public:
  static constexpr int kTwiceSpin = 5;
  static constexpr int kCount = 6;

  /// Throws DomainError unless two_m is odd with |two_m| <= 5.
  static ZeemanLabel from_twice(int two_m);
  /// Index 0..5 for m = -5/2 .. +5/2.
  static ZeemanLabel from_index(int index);
  static std::array<ZeemanLabel, kCount> all();

  int twice() const { return two_m_; }
  double value() const { return 0.5 * two_m_; }
  int index() const { return (two_m_ + kTwiceSpin) / 2; }
  std::string str() const;

  friend bool operator==(ZeemanLabel, ZeemanLabel) = default;

 private:
  explicit ZeemanLabel(int two_m) : two_m_(two_m) {}
  int two_m_;
};

/// Every atomic and laser parameter that enters the coherent-amplitude map.
/// Angular frequencies in rad/s, SI units elsewhere.
struct ZeemanDriveConfig {
  double delta_R = constants::two_pi * 20.0e6;
  double omega0_prime = constants::two_pi * 0.85e6;
  double t_d = 50.0e-6;
  double B0 = 0.74e-3;
  double g_P1 = 3.0 / 7.0;
  double g_I = -0.00097248;
  double z0_Al = 5.86e-9;
  double lambda_P1 = 267.4e-9;
  std::optional<double> eta_override;     // replaces 2 pi sqrt(2) z0 / lambda
  std::optional<double> larmor_override;  // rad/s, replaces |g_I| mu_B B0 / hbar

  /// One message per violated invariant, keyed by field name.
  std::vector<std::string> violations() const;
  void validate() const;
};

/// <j, m; 1, 1 | j+1, m+1>. Throws DomainError when |m| > j or the parities
/// of two_j and two_m differ.
double clebsch_gordan_stretched(int two_j, int two_m);

/// Delta_m = Delta_R + g_P1 (5/2 - m) mu_B B0 / hbar.
double zeeman_detuning(ZeemanLabel m, const ZeemanDriveConfig& cfg);

/// 2 pi sqrt(2) z0 / wavelength. Throws DomainError for wavelength <= 0.
double lamb_dicke(double z0, double wavelength);

/// eta for cfg: the override when present, otherwise lamb_dicke(z0_Al, lambda_P1).
double effective_lamb_dicke(const ZeemanDriveConfig& cfg);

/// |g_I| mu_B B0 / hbar.
double larmor_frequency(double B0, double g_I);
double effective_larmor_frequency(const ZeemanDriveConfig& cfg);

struct CoherentAmplitude {
  double beta = 0.0;
  /// beta * z0 >= lambda / (2 pi sqrt 2): outside the Lamb-Dicke regime.
  bool lamb_dicke_warning = false;
};

/// Throws SingularityError when Delta_m == 0.
CoherentAmplitude coherent_amplitude(ZeemanLabel m, const ZeemanDriveConfig& cfg);

struct BetaTableRow {
  ZeemanLabel m;
  double clebsch = 0.0;
  double detuning = 0.0;       // rad/s
  double beta_forward = 0.0;   // direct evaluation with cfg
  double beta = 0.0;           // after anchoring beta(5/2), if requested
  bool lamb_dicke_warning = false;
};

/// Amplitudes for m = -5/2 .. +5/2. With an anchor the whole table is
/// rescaled so that beta(+5/2) equals it; ratios are untouched.
std::array<BetaTableRow, ZeemanLabel::kCount> beta_table(
    const ZeemanDriveConfig& cfg, std::optional<double> beta_stretched_anchor = std::nullopt);

}  // namespace iondetect
