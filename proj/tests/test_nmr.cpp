#include <doctest.h>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "iondetect/errors.hpp"
#include "iondetect/nmr.hpp"
#include "oracles.hpp"

using namespace iondetect;

namespace {

std::vector<double> grid(double hi, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = hi * static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

NmrConfig with_ratio(double ratio) {
  NmrConfig cfg;
  cfg.delta_B = ratio * cfg.omega_B_rabi;
  cfg.dt = cfg.max_step();
  return cfg;
}

}  // namespace

TEST_SUITE("nmr-dynamics") {

TEST_CASE("spin matrices obey the angular-momentum algebra") {
  const SpinMatrix jz = spin_jz(), jx = spin_jx();
  CHECK((jx - jx.adjoint()).norm() < 1e-15);
  const SpinMatrix jy = std::complex<double>(0, -1) * (jz * jx - jx * jz);
  const SpinMatrix j2 = jx * jx + jy * jy + jz * jz;
  CHECK((j2 - 2.5 * 3.5 * SpinMatrix::Identity()).norm() < 1e-12);
  CHECK(jz(5, 5).real() == 2.5);
  CHECK(rwa_hamiltonian(with_ratio(2.0)).isApprox(rwa_hamiltonian(with_ratio(2.0)).adjoint()));
}

TEST_CASE("resonant populations are binomial") {
  const NmrConfig cfg = with_ratio(0.0);
  const auto times = grid(cfg.t_max, 41);
  const auto pops = evolve_populations(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, times);
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double s = std::sin(cfg.omega_B_rabi * times[i] / 2.0);
    for (int k = 0; k <= 5; ++k) {
      const std::size_t idx = static_cast<std::size_t>(5 - k);
      worst = std::max(worst, std::abs(pops[i][idx] - oracle::binomial_population(k, s * s)));
    }
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("detuned populations match the Wigner-d rotation") {
  double worst = 0.0;
  for (double ratio : {-1.0, 0.5, 2.0, 3.0}) {
    const NmrConfig cfg = with_ratio(ratio);
    const auto times = grid(cfg.t_max, 20);
    const auto pops = evolve_populations(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto ref = oracle::spin52_populations(cfg.omega_B_rabi, cfg.delta_B, times[i]);
      for (std::size_t m = 0; m < 6; ++m) worst = std::max(worst, std::abs(pops[i][m] - ref[m]));
    }
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("propagation agrees with the matrix exponential") {
  NmrConfig cfg = with_ratio(1.3);
  SpinState start;
  start.amplitudes << 0.1, std::complex<double>(0.2, 0.3), 0.4, 0.0, std::complex<double>(0.0, -0.5), 0.6;
  start.amplitudes.normalize();
  const double t = 0.73e-3;
  const SpinMatrix u = (std::complex<double>(0, -t) * rwa_hamiltonian(cfg)).exp();
  const SpinVector ref = u * start.amplitudes;
  const SpinState got = evolve(start, cfg, t);
  CHECK((got.amplitudes - ref).norm() < 1e-8);
  CHECK(std::abs(got.norm2() - 1.0) < 1e-12);
}

TEST_CASE("full flip and generalized Rabi frequency") {
  NmrConfig cfg = with_ratio(0.0);
  const double t_pi = M_PI / cfg.omega_B_rabi;
  const auto p = evolve(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, t_pi).populations();
  CHECK(std::abs(p[0] - 1.0) < 1e-8);

  cfg = with_ratio(2.0);
  const double og = std::sqrt(5.0) * cfg.omega_B_rabi;
  const double period = 2.0 * M_PI / og;
  const auto back = evolve(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, period).populations();
  CHECK(std::abs(back[5] - 1.0) < 1e-8);
  // single-spin transfer fraction at half a generalized period
  const auto half = evolve(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, period / 2).populations();
  const double p_single = 0.2;
  CHECK(half[5] == doctest::Approx(std::pow(1 - p_single, 5)).epsilon(1e-7));
}

TEST_CASE("step-size and normalisation guards") {
  NmrConfig cfg;
  cfg.dt = 1e-4;
  const auto v = cfg.violations();
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("dt", 0) == 0);
  CHECK_THROWS_AS(evolve(SpinState::basis(ZeemanLabel::from_twice(5)), cfg, 1e-3), ConfigError);
  SpinState bad;
  bad.amplitudes(0) = 2.0;
  CHECK_THROWS_AS(evolve(bad, with_ratio(0.0), 1e-4), DomainError);
  const std::vector<double> unsorted{2e-4, 1e-4};
  CHECK_THROWS(evolve_populations(SpinState::basis(ZeemanLabel::from_twice(5)), with_ratio(0.0), unsorted));
}

TEST_CASE("Rabi-rate fit coverage and cross-prediction") {
  const DetectionMap map = predicted_levels(ZeemanTrajectoryConfig{});
  const NmrConfig res = with_ratio(0.0);
  const NmrConfig det = with_ratio(2.0);
  const auto times = grid(res.t_max, 61);
  int covered = 0;
  int chi_ok = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto curve = resonance_curve(res, times, map, MonteCarloSampling{200, static_cast<std::uint64_t>(s), 1});
    std::vector<SignalPoint> pts;
    for (std::size_t i = 0; i < times.size(); ++i) pts.push_back({times[i], curve.mc_signal[i], curve.mc_err[i]});
    const RabiFit fit = fit_rabi_rate(pts, map);
    covered += std::abs(fit.omega_B - res.omega_B_rabi) <= 3.0 * fit.sigma;

    NmrConfig pred = det;
    pred.omega_B_rabi = fit.omega_B;
    pred.delta_B = 2.0 * fit.omega_B;
    pred.dt = pred.max_step();
    const auto model = resonance_curve(pred, times, map).expected;
    const auto held = resonance_curve(det, times, map, MonteCarloSampling{200, 1000 + static_cast<std::uint64_t>(s), 1});
    std::vector<SignalPoint> hp;
    for (std::size_t i = 0; i < times.size(); ++i) hp.push_back({times[i], held.mc_signal[i], held.mc_err[i]});
    const double chi = reduced_chi2(hp, model);
    chi_ok += chi >= 0.5 && chi <= 2.0;
  }
  CHECK(covered >= 95);
  CHECK(chi_ok >= 95);
}

TEST_CASE("flat data cannot identify a Rabi rate") {
  const DetectionMap map = predicted_levels(ZeemanTrajectoryConfig{});
  std::vector<SignalPoint> flat;
  for (int i = 0; i < 12; ++i) flat.push_back({i * 1e-4, 5.0, 0.1});
  CHECK_THROWS_AS(fit_rabi_rate(flat, map), NonIdentifiableError);
}

TEST_CASE("Monte Carlo curve is independent of workers") {
  const DetectionMap map = predicted_levels(ZeemanTrajectoryConfig{});
  const auto times = grid(2e-3, 21);
  const auto a = resonance_curve(with_ratio(2.0), times, map, MonteCarloSampling{50, 4, 1}, 0.05);
  const auto b = resonance_curve(with_ratio(2.0), times, map, MonteCarloSampling{50, 4, 3}, 0.05);
  CHECK(a.mc_signal == b.mc_signal);
  CHECK(a.expected.front() == doctest::Approx(0.95 * map.levels[5] + 0.01 * (map.levels[0] + map.levels[1] + map.levels[2] + map.levels[3] + map.levels[4])));
}

}  // TEST_SUITE
