#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "evtrack/error.hpp"
#include "evtrack/suite.hpp"

using namespace evtrack;

TEST(Suite, LogSpace) {
  const auto w = log_space(0.5, 50.0, 5);
  ASSERT_EQ(w.size(), 5u);
  EXPECT_DOUBLE_EQ(w.front(), 0.5);
  EXPECT_DOUBLE_EQ(w.back(), 50.0);
  EXPECT_NEAR(w[2], 5.0, 1e-12);
}

TEST(Suite, TorqueAuthority) {
  PlantParams p;
  EXPECT_DOUBLE_EQ(torque_authority(p), 2 * 0.15 * 2.0);
  p.bias_thrust = 3.0;
  EXPECT_DOUBLE_EQ(torque_authority(p), 2 * 0.15 * 1.0);
}

TEST(Suite, BodeAmplitudeRespectsRateAndAuthority) {
  const ExperimentConfig c;
  const BodeOptions o;
  for (double w : o.omegas) {
    const double a = bode_amplitude(c, w, o);
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, deg2rad(o.peak_rate_deg_s) / w * (1 + 1e-12));
  }
  EXPECT_NEAR(loop_time_constant(c), 0.149, 1e-12);
}

TEST(Suite, RmseSweepProducesOneSamplePerSpeed) {
  ExperimentConfig base;
  RmseOptions o;
  o.speeds_deg_s = {200, 800, 1200, 1600};
  o.duration = 1.0;
  const RmseSweep s = run_rmse_sweep(base, 12000, o);
  ASSERT_EQ(s.samples.size(), 4u);
  EXPECT_DOUBLE_EQ(s.expected_delay_ms, 12.0);
  ASSERT_TRUE(s.delay.has_value()) << s.delay_error;
  EXPECT_NEAR(s.delay->slope_ms, 12.0, 2.0);
}

TEST(Suite, EncoderBodeSweepFits) {
  ExperimentConfig base;
  base.feedback = FeedbackSource::encoder;
  BodeOptions o;
  o.omegas = log_space(0.5, 30.0, 8);
  const BodeSweep s = run_bode_sweep(base, o);
  ASSERT_EQ(s.points.size(), 8u);
  ASSERT_TRUE(s.fit.has_value()) << s.fit_error;
  EXPECT_NEAR(s.fit->fit.K, 1.0, 0.05);
  EXPECT_NEAR(natural_frequency(s.fit->fit), 1.0 / 0.149, 1.0);
}

TEST(Suite, InertiaIdentificationWritesReport) {
  SuiteOptions o;
  const auto dir = std::filesystem::path(::testing::TempDir()) / "evtrack_suite";
  std::filesystem::remove_all(dir);
  o.out_dir = dir;
  const SuiteResult r = run_suite("inertia_id", o);
  EXPECT_TRUE(r.runs_ok);
  ASSERT_FALSE(r.checks.empty());
  EXPECT_TRUE(std::filesystem::exists(dir));
}

TEST(Suite, UnknownNameIsAConfigError) {
  EXPECT_THROW(run_suite("bogus", SuiteOptions{}), ConfigError);
  EXPECT_EQ(suite_names().size(), 6u);
}
