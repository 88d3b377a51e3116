#include "iondetect/atomic_core.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "iondetect/errors.hpp"

namespace iondetect {

namespace {

bool lamb_dicke_violated(double beta, const ZeemanDriveConfig& cfg) {
  return beta * cfg.z0_Al >= cfg.lambda_P1 / (constants::two_pi * std::sqrt(2.0));
}

}  // namespace

ZeemanLabel ZeemanLabel::from_twice(int two_m) {
  if (std::abs(two_m) > kTwiceSpin || two_m % 2 == 0) {
    throw DomainError("Zeeman label 2m = " + std::to_string(two_m) +
                      " is not a half-odd-integer in [-5/2, 5/2]");
  }
  return ZeemanLabel(two_m);
}

ZeemanLabel ZeemanLabel::from_index(int index) {
  if (index < 0 || index >= kCount) {
    throw DomainError("Zeeman index " + std::to_string(index) + " outside 0..5");
  }
  return ZeemanLabel(2 * index - kTwiceSpin);
}

std::array<ZeemanLabel, ZeemanLabel::kCount> ZeemanLabel::all() {
  return {ZeemanLabel(-5), ZeemanLabel(-3), ZeemanLabel(-1),
          ZeemanLabel(1),  ZeemanLabel(3),  ZeemanLabel(5)};
}

std::string ZeemanLabel::str() const {
  return std::to_string(two_m_) + "/2";
}

std::vector<std::string> ZeemanDriveConfig::violations() const {
  std::vector<std::string> out;
  if (!(delta_R != 0.0) || !std::isfinite(delta_R)) out.emplace_back("delta_R: must be finite and nonzero");
  if (!(t_d >= 0.0)) out.emplace_back("t_d: must be >= 0");
  if (!(lambda_P1 > 0.0)) out.emplace_back("lambda_P1: must be > 0");
  if (!(z0_Al > 0.0)) out.emplace_back("z0_Al: must be > 0");
  if (!std::isfinite(omega0_prime)) out.emplace_back("omega0_prime: must be finite");
  if (!std::isfinite(B0)) out.emplace_back("B0: must be finite");
  if (eta_override && !(*eta_override >= 0.0)) out.emplace_back("eta_override: must be >= 0");
  if (larmor_override && !(*larmor_override >= 0.0)) out.emplace_back("larmor_override: must be >= 0");
  return out;
}

void ZeemanDriveConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) throw ConfigError("ZeemanDriveConfig." + v.front());
}

double clebsch_gordan_stretched(int two_j, int two_m) {
  if (two_j < 0 || std::abs(two_m) > two_j || (two_j - two_m) % 2 != 0) {
    std::ostringstream msg;
    msg << "clebsch_gordan_stretched: invalid (2j, 2m) = (" << two_j << ", " << two_m << ")";
    throw DomainError(msg.str());
  }
  // <j m; 1 1 | j+1 m+1>^2 = (j+m+1)(j+m+2) / ((2j+1)(2j+2)), written in
  // doubled integers so the stretched case is exactly 1.
  const long a = two_j + two_m + 2;   // 2(j+m+1)
  const long b = two_j + two_m + 4;   // 2(j+m+2)
  const long c = two_j + 1;           // 2j+1
  const long d = two_j + 2;           // 2j+2
  const long num = a * b;
  const long den = 4 * c * d;
  if (num == den) return 1.0;
  return std::sqrt(static_cast<double>(num) / static_cast<double>(den));
}

double zeeman_detuning(ZeemanLabel m, const ZeemanDriveConfig& cfg) {
  const int steps_twice = ZeemanLabel::kTwiceSpin - m.twice();  // 2 (5/2 - m)
  if (steps_twice == 0) return cfg.delta_R;
  const double shift =
      cfg.g_P1 * 0.5 * steps_twice * constants::bohr_magneton * cfg.B0 / constants::hbar;
  return cfg.delta_R + shift;
}

double lamb_dicke(double z0, double wavelength) {
  if (!(wavelength > 0.0)) throw DomainError("lamb_dicke: wavelength must be > 0");
  return constants::two_pi * std::sqrt(2.0) * z0 / wavelength;
}

double effective_lamb_dicke(const ZeemanDriveConfig& cfg) {
  return cfg.eta_override ? *cfg.eta_override : lamb_dicke(cfg.z0_Al, cfg.lambda_P1);
}

double larmor_frequency(double B0, double g_I) {
  return std::abs(g_I * constants::bohr_magneton * B0) / constants::hbar;
}

double effective_larmor_frequency(const ZeemanDriveConfig& cfg) {
  return cfg.larmor_override ? *cfg.larmor_override : larmor_frequency(cfg.B0, cfg.g_I);
}

CoherentAmplitude coherent_amplitude(ZeemanLabel m, const ZeemanDriveConfig& cfg) {
  const double detuning = zeeman_detuning(m, cfg);
  if (detuning == 0.0) {
    throw SingularityError("coherent_amplitude: Delta_m vanishes for m = " + m.str());
  }
  const double coupling = cfg.omega0_prime * clebsch_gordan_stretched(ZeemanLabel::kTwiceSpin, m.twice());
  CoherentAmplitude out;
  out.beta = effective_lamb_dicke(cfg) * cfg.t_d * coupling * coupling / std::abs(detuning);
  out.lamb_dicke_warning = lamb_dicke_violated(out.beta, cfg);
  return out;
}

std::array<BetaTableRow, ZeemanLabel::kCount> beta_table(const ZeemanDriveConfig& cfg,
                                                         std::optional<double> anchor) {
  const auto labels = ZeemanLabel::all();
  std::array<BetaTableRow, ZeemanLabel::kCount> rows{
      BetaTableRow{labels[0]}, BetaTableRow{labels[1]}, BetaTableRow{labels[2]},
      BetaTableRow{labels[3]}, BetaTableRow{labels[4]}, BetaTableRow{labels[5]}};
  for (auto& row : rows) {
    row.clebsch = clebsch_gordan_stretched(ZeemanLabel::kTwiceSpin, row.m.twice());
    row.detuning = zeeman_detuning(row.m, cfg);
    row.beta_forward = coherent_amplitude(row.m, cfg).beta;
  }
  double scale = 1.0;
  if (anchor) {
    const double top = rows.back().beta_forward;
    if (top == 0.0) throw DomainError("beta_table: cannot anchor a vanishing beta(5/2)");
    scale = *anchor / top;
  }
  for (auto& row : rows) {
    row.beta = row.beta_forward * scale;
    row.lamb_dicke_warning = lamb_dicke_violated(row.beta, cfg);
  }
  return rows;
}

}  // namespace iondetect
