#include <gtest/gtest.h>

#include "evtrack/controller.hpp"
#include "evtrack/error.hpp"

using namespace evtrack;

TEST(Gains, Synthesis) {
  const ControllerGains g = gains_from(0.149, 0.7, 0.00788);
  EXPECT_NEAR(g.k_p, 0.00788 / (0.149 * 0.149), 1e-15);
  EXPECT_NEAR(g.k_d, 2 * 0.7 * 0.00788 / 0.149, 1e-15);
  EXPECT_NEAR(g.k_p, 0.353, 0.02 * 0.353);
  EXPECT_NEAR(g.k_d, 0.071, 0.05 * 0.071);
  EXPECT_THROW(gains_from(0.0, 0.7, 1.0), ConfigError);
  EXPECT_THROW(gains_from(0.1, -1.0, 1.0), ConfigError);
}

TEST(Gains, PdLaw) {
  const ControllerGains g{2.0, 0.5};
  EXPECT_DOUBLE_EQ(pd_torque(0.1, 0.2, 0.3, 0.0, g), 2.0 * 0.2 - 0.5 * 0.2);
}

TEST(Allocate, SplitsAroundBias) {
  PlantParams p;
  const ThrustCommand c = allocate(0.15, p);
  EXPECT_DOUBLE_EQ(c.f1, 2.5);
  EXPECT_DOUBLE_EQ(c.f2, 1.5);
  EXPECT_FALSE(c.saturated);
  EXPECT_DOUBLE_EQ(c.torque(p), 0.15);
}

TEST(Allocate, ClampsEachRotor) {
  PlantParams p;
  const ThrustCommand c = allocate(1.0, p);
  EXPECT_TRUE(c.saturated);
  EXPECT_EQ(c.f1, p.max_thrust);
  EXPECT_EQ(c.f2, 0.0);
}

TEST(ThrustMap, InverseRoundTrips) {
  const ThrustMap m;
  for (double d = 0.0; d <= 1.0; d += 0.05) {
    const DutyCommand c = thrust_to_duty(m.thrust(d), m);
    EXPECT_NEAR(c.duty, d, 1e-12);
    EXPECT_FALSE(c.saturated);
  }
  EXPECT_TRUE(thrust_to_duty(100.0, m).saturated);
  EXPECT_EQ(thrust_to_duty(100.0, m).duty, 1.0);
  EXPECT_TRUE(thrust_to_duty(-1.0, m).saturated);
  EXPECT_EQ(thrust_to_duty(-1.0, m).duty, 0.0);
  ThrustMap bad{0.0, 1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
}
