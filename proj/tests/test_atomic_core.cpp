#include <doctest.h>

#include <cmath>

#include "iondetect/atomic_core.hpp"
#include "iondetect/errors.hpp"
#include "oracles.hpp"

using namespace iondetect;

TEST_SUITE("atomic-core") {

TEST_CASE("stretched coefficients match the Racah sum for j = 1/2 .. 9/2") {
  for (int two_j = 1; two_j <= 9; two_j += 2) {
    for (int two_m = -two_j; two_m <= two_j; two_m += 2) {
      const double oracle = oracle::racah_cg(two_j, two_m, 2, 2, two_j + 2, two_m + 2);
      CHECK(clebsch_gordan_stretched(two_j, two_m) == doctest::Approx(oracle).epsilon(1e-13));
    }
  }
}

TEST_CASE("spin-5/2 values and sum rule") {
  CHECK(clebsch_gordan_stretched(5, 3) == doctest::Approx(0.8452).epsilon(5e-5));
  CHECK(clebsch_gordan_stretched(5, -5) == doctest::Approx(0.2182).epsilon(5e-5));
  CHECK(clebsch_gordan_stretched(5, 5) == 1.0);
  for (int two_j = 1; two_j <= 9; two_j += 2) {
    double sum = 0.0;
    for (int two_m = -two_j; two_m <= two_j; two_m += 2) {
      const double c = clebsch_gordan_stretched(two_j, two_m);
      CHECK(c > 0.0);
      CHECK(c <= 1.0);
      sum += c * c;
    }
    CHECK(sum == doctest::Approx((two_j + 3) / 3.0).epsilon(1e-13));
  }
}

TEST_CASE("invalid quantum numbers") {
  CHECK_THROWS_AS(clebsch_gordan_stretched(5, 7), DomainError);
  CHECK_THROWS_AS(clebsch_gordan_stretched(5, 2), DomainError);
  CHECK_THROWS_AS(ZeemanLabel::from_twice(4), DomainError);
  CHECK_THROWS_AS(ZeemanLabel::from_twice(-7), DomainError);
  CHECK_THROWS_AS(ZeemanLabel::from_index(6), DomainError);
  CHECK(ZeemanLabel::from_twice(-3).index() == 1);
  CHECK(ZeemanLabel::from_index(4).str() == "3/2");
}

TEST_CASE("Zeeman detuning steps") {
  const ZeemanDriveConfig cfg;
  // mu_B B0 / h = 10.357 MHz, times g = 3/7
  const double step_hz = 3.0 / 7.0 * 9.2740100783e-24 * 0.74e-3 / 6.62607015e-34;
  CHECK(step_hz == doctest::Approx(4.439e6).epsilon(2e-4));
  CHECK(zeeman_detuning(ZeemanLabel::from_twice(5), cfg) == cfg.delta_R);
  CHECK(zeeman_detuning(ZeemanLabel::from_twice(3), cfg) / constants::two_pi ==
        doctest::Approx(24.44e6).epsilon(2e-4));
  CHECK(zeeman_detuning(ZeemanLabel::from_twice(-5), cfg) / constants::two_pi ==
        doctest::Approx(42.2e6).epsilon(5e-4));
  for (int i = 1; i < ZeemanLabel::kCount; ++i) {
    const double d = zeeman_detuning(ZeemanLabel::from_index(i - 1), cfg) -
                     zeeman_detuning(ZeemanLabel::from_index(i), cfg);
    CHECK(d / constants::two_pi == doctest::Approx(step_hz).epsilon(1e-9));
  }
}

TEST_CASE("Lamb-Dicke and Larmor arithmetic") {
  CHECK(lamb_dicke(5.86e-9, 267.4e-9) == doctest::Approx(0.1948).epsilon(3e-4));
  CHECK_THROWS_AS(lamb_dicke(5.86e-9, 0.0), DomainError);
  const ZeemanDriveConfig cfg;
  CHECK(larmor_frequency(cfg.B0, cfg.g_I) / constants::two_pi == doctest::Approx(10.07e3).epsilon(1e-3));
  ZeemanDriveConfig over = cfg;
  over.larmor_override = constants::two_pi * 8.3e3;
  CHECK(effective_larmor_frequency(over) == *over.larmor_override);
  over.eta_override = 0.195;
  CHECK(effective_lamb_dicke(over) == 0.195);
}

TEST_CASE("coherent amplitude from the drive parameters") {
  ZeemanDriveConfig cfg;
  cfg.eta_override = 0.195;
  const auto a = coherent_amplitude(ZeemanLabel::from_twice(5), cfg);
  CHECK(a.beta == doctest::Approx(2.15).epsilon(0.10 / 2.15));
  CHECK_FALSE(a.lamb_dicke_warning);

  ZeemanDriveConfig bad = cfg;
  bad.delta_R = 0.0;
  CHECK_THROWS_AS(coherent_amplitude(ZeemanLabel::from_twice(5), bad), SingularityError);

  ZeemanDriveConfig strong = cfg;
  strong.t_d = 5e-3;
  CHECK(coherent_amplitude(ZeemanLabel::from_twice(5), strong).lamb_dicke_warning);
}

TEST_CASE("anchored table keeps the parameter-free ratios") {
  const ZeemanDriveConfig cfg;
  const auto table = beta_table(cfg, 2.15);
  const double expected[] = {0.049, 0.163, 0.368, 0.709, 1.256, 2.150};
  const double reported[] = {0.05, 0.16, 0.37, 0.71, 1.26, 2.15};
  const double d52 = zeeman_detuning(ZeemanLabel::from_twice(5), cfg);
  for (int i = 0; i < ZeemanLabel::kCount; ++i) {
    const auto& row = table[static_cast<std::size_t>(i)];
    const double c = oracle::racah_cg(5, row.m.twice(), 2, 2, 7, row.m.twice() + 2);
    const double ratio = c * c * d52 / zeeman_detuning(row.m, cfg);
    CHECK(row.beta == doctest::Approx(2.15 * ratio).epsilon(1e-12));
    CHECK(row.beta == doctest::Approx(expected[i]).epsilon(1e-3 / expected[i]));
    CHECK(std::abs(row.beta - reported[i]) <= 0.01);
  }
  for (int i = 1; i < ZeemanLabel::kCount; ++i) {
    CHECK(table[static_cast<std::size_t>(i)].beta > table[static_cast<std::size_t>(i - 1)].beta);
  }
  const auto forward = beta_table(cfg);
  CHECK(forward.back().beta == forward.back().beta_forward);
  CHECK(forward.back().beta == doctest::Approx(2.21).epsilon(0.005));
}

TEST_CASE("drive config violations are all reported") {
  ZeemanDriveConfig cfg;
  CHECK(cfg.violations().empty());
  cfg.t_d = -1.0;
  cfg.lambda_P1 = 0.0;
  const auto v = cfg.violations();
  CHECK(v.size() >= 2);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

}  // TEST_SUITE
