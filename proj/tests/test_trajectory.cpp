#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "iondetect/errors.hpp"
#include "iondetect/estimators.hpp"
#include "iondetect/trajectory.hpp"
#include "oracles.hpp"

using namespace iondetect;

namespace {

ClockTrajectoryConfig quick_clock() {
  ClockTrajectoryConfig cfg;
  cfg.total_time = 20.0;
  cfg.fluorescence.mean_rate = 2.0e4;
  return cfg;
}

ZeemanTrajectoryConfig pinned(int twice_m) {
  ZeemanTrajectoryConfig cfg;
  cfg.p_jump_per_cycle = 0.0;
  cfg.p_raman_depump = std::array<double, ZeemanLabel::kCount>{};
  cfg.initial_twice_m = twice_m;
  cfg.total_time = 60.0;
  return cfg;
}

}  // namespace

TEST_SUITE("trajectory-sim") {

TEST_CASE("clock record does not depend on the worker count") {
  const auto cfg = quick_clock();
  const auto a = simulate_clock(cfg, 17, 1);
  const auto b = simulate_clock(cfg, 17, 4);
  CHECK(a.signal == b.signal);
  CHECK(a.true_state == b.true_state);
  CHECK(a.events.size() == b.events.size());
  CHECK(a.window_duration == doctest::Approx(cfg.averaging_time).epsilon(0.01));
}

TEST_CASE("clock signal separates the two states") {
  auto cfg = quick_clock();
  cfg.fluorescence.mean_rate = 1.0e5;
  const auto rec = simulate_clock(cfg, 3, 1);
  std::vector<double> s0, p0;
  for (std::size_t i = 0; i < rec.signal.size(); ++i) (rec.true_state[i] == kClockS0 ? s0 : p0).push_back(rec.signal[i]);
  REQUIRE(!s0.empty());
  CHECK(oracle::mean(s0) == doctest::Approx(0.1 * bin_window_gain(16)).epsilon(0.1));
  if (p0.size() > 3) CHECK(std::abs(oracle::mean(p0)) < 0.02);
}

TEST_CASE("P0 dwell times follow the configured lifetime") {
  ClockTrajectoryConfig cfg;
  cfg.p_drive = 0.0;
  cfg.initial_state = kClockP0;
  cfg.p0_lifetime = 0.5;
  cfg.total_time = 6.0;
  cfg.sequence_time = 1e-3;
  cfg.averaging_time = 0.1;
  cfg.fluorescence.mean_rate = 10.0;
  std::vector<double> dwell;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto rec = simulate_clock(cfg, seed, 1);
    REQUIRE(rec.events.size() <= 1);
    if (!rec.events.empty()) dwell.push_back(rec.events[0].time);
  }
  // censored at total_time: compare against the truncated exponential
  const double tail = std::exp(-cfg.total_time / cfg.p0_lifetime);
  const double p = oracle::ks_pvalue(dwell, [&](double t) { return (1.0 - std::exp(-t / cfg.p0_lifetime)) / (1.0 - tail); });
  CHECK(p > 0.01);
}

TEST_CASE("window estimates are reproducible per trial") {
  const ClockTrajectoryConfig cfg;
  const auto a = clock_window_estimates(kClockS0, 40, 0.02, cfg, 5, 1);
  const auto b = clock_window_estimates(kClockS0, 40, 0.02, cfg, 5, 3);
  CHECK(a == b);
  const auto c = clock_window_estimates(kClockP0, 40, 0.02, cfg, 5, 1);
  CHECK(a != c);
}

TEST_CASE("predicted levels follow the readout composition") {
  const ZeemanTrajectoryConfig cfg;
  const auto map = predicted_levels(cfg);
  CHECK(map.bright_mean == doctest::Approx(10.0));
  CHECK(map.dark_mean == doctest::Approx(0.2));
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(map.levels[i] == doctest::Approx(map.p_down[i] * 10.0 + (1 - map.p_down[i]) * 0.2));
    CHECK(map.beta[i] == doctest::Approx(beta_table(cfg.drive, 2.15)[i].beta));
  }
  // Readout falls from m = -5/2 to 3/2; 5/2 overshoots the RSB minimum and
  // reads brighter than 3/2 again.
  for (std::size_t i = 1; i < 5; ++i) CHECK(map.levels[i] < map.levels[i - 1]);
  CHECK(map.levels[5] > map.levels[4]);
  const auto lc = level_classifier(map);
  CHECK(std::is_sorted(lc.thresholds.begin(), lc.thresholds.end()));
  CHECK(lc.class_to_index.size() == lc.thresholds.size() + 1);
}

TEST_CASE("pinned Zeeman runs reproduce the predicted level") {
  for (int twice_m = -5; twice_m <= 5; twice_m += 2) {
    const auto cfg = pinned(twice_m);
    const auto map = predicted_levels(cfg);
    const auto rec = simulate_zeeman(cfg, 100 + static_cast<std::uint64_t>(twice_m + 5), 1);
    CHECK(rec.events.empty());
    const double level = map.levels[static_cast<std::size_t>(ZeemanLabel::from_twice(twice_m).index())];
    const double se = std::sqrt(oracle::variance(rec.signal) / static_cast<double>(rec.signal.size()));
    CHECK(std::abs(oracle::mean(rec.signal) - level) < 3.5 * se);
    CHECK(std::all_of(rec.true_state.begin(), rec.true_state.end(), [&](int s) { return s == twice_m; }));
  }
}

TEST_CASE("Raman jumps occur at the configured rate") {
  ZeemanTrajectoryConfig cfg;
  cfg.p_raman_depump = std::array<double, ZeemanLabel::kCount>{};
  cfg.p_jump_per_cycle = 1e-3;
  cfg.total_time = 300.0;
  const auto rec = simulate_zeeman(cfg, 8, 2);
  const double cycles = static_cast<double>(rec.times.size() * cfg.cycles_per_point);
  const double expected = cycles * cfg.p_jump_per_cycle;
  CHECK(std::abs(static_cast<double>(rec.events.size()) - expected) < 3.0 * std::sqrt(expected));
  for (const auto& e : rec.events) {
    CHECK(std::abs(e.to - e.from) == 2);
    CHECK(std::abs(e.to) <= 5);
  }
  CHECK(simulate_zeeman(cfg, 8, 1).signal == rec.signal);
}

TEST_CASE("depumping moves toward the stretched state") {
  ZeemanTrajectoryConfig cfg;
  cfg.p_jump_per_cycle = 0.0;
  cfg.p_raman_depump = std::array<double, ZeemanLabel::kCount>{0.01, 0.01, 0.01, 0.01, 0.01, 0.01};
  cfg.initial_twice_m = -5;
  cfg.total_time = 30.0;
  const auto rec = simulate_zeeman(cfg, 2, 1);
  REQUIRE(!rec.events.empty());
  for (const auto& e : rec.events) {
    CHECK(e.cause == "depump");
    CHECK((e.to - e.from == 2 || e.to - e.from == 4));
  }
  CHECK(rec.true_state.back() == 5);

  const auto scaled = ZeemanTrajectoryConfig{}.depump_probabilities();
  CHECK(scaled[4] == doctest::Approx(ZeemanTrajectoryConfig{}.depump_reference));
  CHECK(scaled[5] > scaled[4]);
  CHECK(scaled[0] < scaled[1]);
}

TEST_CASE("cycle time interpretation") {
  ZeemanTrajectoryConfig cfg;
  CHECK(cfg.seconds_per_cycle() == cfg.cycle_time);
  cfg.cycle_time_is_per_point = true;
  CHECK(cfg.seconds_per_cycle() == doctest::Approx(cfg.cycle_time / 120.0));
}

TEST_CASE("trajectory config violations") {
  ClockTrajectoryConfig c;
  CHECK(c.violations().empty());
  c.p_drive = 2.0;
  c.sequence_time = 1e-4;
  CHECK(c.violations().size() == 2);
  CHECK_THROWS_AS(simulate_clock(c, 1), ConfigError);

  ZeemanTrajectoryConfig z;
  CHECK(z.violations().empty());
  z.jump_kernel = {0.7, 0.7};
  z.initial_twice_m = 2;
  CHECK(z.violations().size() == 2);
}

}  // TEST_SUITE
