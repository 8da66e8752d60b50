#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "evtrack/camera.hpp"
#include "evtrack/error.hpp"
#include "evtrack/hough.hpp"

using namespace evtrack;

TEST(HoughWindow, BinGeometry) {
  EXPECT_EQ(HoughWindow::rho_index(0.0), 30);
  EXPECT_DOUBLE_EQ(HoughWindow::rho_center(30), 0.0);
  EXPECT_EQ(HoughWindow::rho_index(-150.0), 0);
  EXPECT_EQ(HoughWindow::rho_index(150.0), 60);
  EXPECT_EQ(HoughWindow::rho_index(153.0), -1);
  EXPECT_DOUBLE_EQ(HoughWindow::theta_deg(35), 175.0);
}

TEST(HoughWindow, UnwrapRoll) {
  EXPECT_DOUBLE_EQ(HoughWindow::unwrap_roll(90.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(HoughWindow::unwrap_roll(90.0, 170.0), 180.0);
  EXPECT_DOUBLE_EQ(HoughWindow::unwrap_roll(0.0, 80.0), 90.0);
  EXPECT_DOUBLE_EQ(HoughWindow::unwrap_roll(175.0, -80.0), -85.0);
}

TEST(HoughWindow, IncrementalEqualsRebuildUnderRandomOperations) {
  HoughConfig cfg;
  cfg.capacity = 50;
  HoughWindow w(cfg);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> xs(0, 239), ys(0, 179), op(0, 3);
  Micros t = 0;
  for (int i = 0; i < 20000; ++i) {
    const int o = op(rng);
    if (o == 0 && !w.events().empty()) {
      w.evict_oldest();
    } else if (o == 1) {
      w.maintain(t - 200);
    } else {
      t += 3;
      w.insert({static_cast<std::uint16_t>(xs(rng)), static_cast<std::uint16_t>(ys(rng)), 1, t});
    }
    ASSERT_EQ(w.accumulator(), w.rebuild()) << "after operation " << i;
  }
}

TEST(HoughWindow, MaintainAgesThenCaps) {
  HoughConfig cfg;
  cfg.capacity = 3;
  cfg.span = 100;
  HoughWindow w(cfg);
  for (Micros t = 0; t < 5; ++t) w.insert({120, 10, 1, t * 50});
  // t = 0, 50, 100, 150, 200
  auto gone = w.maintain(200);
  ASSERT_EQ(gone.size(), 2u);
  EXPECT_EQ(gone[0].t, 0);
  EXPECT_EQ(gone[1].t, 50);
  EXPECT_EQ(w.events().size(), 3u);
  gone = w.maintain(260);
  EXPECT_EQ(gone.size(), 2u);
  EXPECT_EQ(w.events().front().t, 200);
}

TEST(HoughWindow, DetectsASyntheticHorizon) {
  CameraModel m;
  m.noise_rate = 0;
  m.refractory = 0;
  for (double roll_deg : {-60.0, -20.0, 0.0, 35.0, 80.0}) {
    EventCamera cam(m, 1);
    HoughWindow w;
    const double r = roll_deg * kPi / 180;
    for (const Event& e : cam.generate(r - 0.02, r + 0.02, 0, 1000)) {
      if (w.events().size() == w.config().capacity) w.evict_oldest();
      w.insert(e);
    }
    const auto peak = w.peak(roll_deg);
    ASSERT_TRUE(peak.has_value()) << roll_deg;
    EXPECT_NEAR(peak->z_deg, roll_deg, 2.5 + 1e-9) << roll_deg;
    EXPECT_NEAR(peak->rho_px, 0.0, 2.5 + 1e-9);
    EXPECT_GE(peak->count, w.config().min_line_count);
  }
}

TEST(HoughWindow, NoPeakBelowGate) {
  HoughWindow w;
  for (int i = 0; i < 10; ++i) w.insert({static_cast<std::uint16_t>(100 + i), 90, 1, i});
  EXPECT_FALSE(w.peak(0.0).has_value());
}

TEST(HoughWindow, RejectsOutOfOrderAndEmptyEvict) {
  HoughWindow w;
  w.insert({10, 10, 1, 100});
  EXPECT_THROW(w.insert({10, 10, 1, 99}), ContractViolation);
  w.evict_oldest();
  EXPECT_THROW(w.evict_oldest(), ContractViolation);
}

TEST(HoughWindow, OffSensorEventIsAFaultAndLeavesStateAlone) {
  HoughWindow w;
  w.insert({10, 10, 1, 0});
  const auto before = w.accumulator();
  EXPECT_THROW(w.insert({5000, 5000, 1, 1}), FaultError);
  EXPECT_EQ(w.accumulator(), before);
  EXPECT_EQ(w.events().size(), 1u);
}

TEST(HoughWindow, InvalidConfig) {
  HoughConfig c;
  c.capacity = 0;
  EXPECT_THROW(HoughWindow{c}, ConfigError);
  c = {};
  c.span = 0;
  EXPECT_THROW(HoughWindow{c}, ConfigError);
}
