#include <cmath>

#include <gtest/gtest.h>

#include "evtrack/camera.hpp"
#include "evtrack/error.hpp"
#include "evtrack/estimator.hpp"

using namespace evtrack;

namespace {

/// Horizon turning at `rate_deg_s` from zero, seen by a noiseless camera.
struct Rig {
  explicit Rig(CameraModel m = {}) : cam(m, 1) {}
  std::vector<Event> step(double rate_deg_s, Micros t0, Micros t1) {
    const double a = deg2rad(rate_deg_s * t0 * 1e-6), b = deg2rad(rate_deg_s * t1 * 1e-6);
    return cam.generate(a, b, t0, t1);
  }
  EventCamera cam;
};

}  // namespace

TEST(HorizonEstimator, UninitializedUntilFirstLine) {
  HorizonEstimator est;
  const auto r = est.tick({}, 0.0, 1000);
  EXPECT_FALSE(r.initialized);
  EXPECT_FALSE(r.measurement.has_value());
}

TEST(HorizonEstimator, TracksAConstantRate) {
  Rig rig;
  HorizonEstimator est;
  double worst = 0.0, rate_sum = 0.0;
  int n = 0;
  for (Micros t = 1000; t <= 1000000; t += 1000) {
    const auto ev = rig.step(200.0, t - 1000, t);
    const auto r = est.tick(ev, 0.0, t);
    if (t > 300000 && r.initialized) {
      worst = std::max(worst, std::abs(r.state.alpha - 200.0 * t * 1e-6));
      rate_sum += r.state.alpha_dot;
      ++n;
    }
  }
  EXPECT_TRUE(est.initialized());
  EXPECT_LT(worst, 6.0);
  ASSERT_GT(n, 0);
  EXPECT_NEAR(rate_sum / n, 200.0, 20.0);
}

TEST(HorizonEstimator, RepeatedTickIsANoOp) {
  Rig rig;
  HorizonEstimator est;
  est.prime(0.0, 0.0, 0);
  const auto ev = rig.step(100.0, 0, 1000);
  const auto a = est.tick(ev, 0.0, 1000);
  const auto b = est.tick(ev, 5.0, 1000);
  EXPECT_TRUE(a.advanced);
  EXPECT_FALSE(b.advanced);
  EXPECT_EQ(a.state.alpha, b.state.alpha);
  EXPECT_EQ(a.state.alpha_dot, b.state.alpha_dot);
}

TEST(HorizonEstimator, PrimeStartsTheFilter) {
  HorizonEstimator est;
  est.prime(12.0, 3.0, 0);
  EXPECT_TRUE(est.initialized());
  const auto r = est.tick({}, 0.0, 1000);
  EXPECT_TRUE(r.initialized);
  EXPECT_NEAR(r.state.alpha, 12.003, 1e-12);
}

TEST(HorizonEstimator, LatencyKeepsDelayedEvents) {
  Rig rig;
  EstimatorConfig cfg;
  cfg.event_latency = 5000;
  HorizonEstimator with(cfg), without;
  const auto ev = rig.step(300.0, 0, 1000);
  // Events stamped in [0, 1000) arrive 5 ms late.
  with.tick(ev, 0.0, 6000);
  without.tick(ev, 0.0, 6000);
  EXPECT_EQ(with.window().events().size(), std::min<std::size_t>(ev.size(), cfg.hough.capacity));
  EXPECT_TRUE(without.window().events().empty());
}

TEST(HorizonEstimator, Validation) {
  EstimatorConfig c;
  c.event_latency = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  HorizonEstimator est;
  est.tick({}, 0.0, 2000);
  EXPECT_THROW(est.tick({}, 0.0, 1000), FaultError);
}
