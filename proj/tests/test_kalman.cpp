#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "evtrack/error.hpp"
#include "evtrack/kalman.hpp"

using namespace evtrack;

namespace {

struct Dense {
  Eigen::Vector2d x;
  Eigen::Matrix2d P;
};

Dense dense_predict(Dense d, double u, double dt, const KalmanNoise& n) {
  Eigen::Matrix2d A;
  A << 1, dt, 0, 1;
  d.x = A * d.x + Eigen::Vector2d(0, u);
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Q(0, 0) = n.q_angle;
  Q(1, 1) = n.q_rate;
  d.P = A * d.P * A.transpose() + Q;
  return d;
}

Dense dense_update(Dense d, double z, const KalmanNoise& n) {
  const Eigen::RowVector2d H(1, 0);
  const double S = H * d.P * H.transpose() + n.r_angle;
  const Eigen::Vector2d K = d.P * H.transpose() / S;
  d.x += K * (z - H * d.x);
  const Eigen::Matrix2d I_KH = Eigen::Matrix2d::Identity() - K * H;
  d.P = I_KH * d.P * I_KH.transpose() + K * n.r_angle * K.transpose();
  return d;
}

}  // namespace

TEST(Kalman, MatchesDenseOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> val(-500, 500);
  std::uniform_int_distribution<int> dt(50, 3000);
  const KalmanNoise n{1.0, 1e4, 10.0};
  for (int seq = 0; seq < 500; ++seq) {
    EstimatorState s;
    s.alpha = val(rng);
    s.alpha_dot = val(rng);
    Dense d{{s.alpha, s.alpha_dot}, Eigen::Matrix2d{{25, 0}, {0, 1e6}}};
    for (int k = 0; k < 30; ++k) {
      const Micros step = dt(rng);
      const double u = val(rng) * 0.1;
      s = kf_predict(s, u, step, n);
      d = dense_predict(d, u, step * 1e-6, n);
      if (k % 3 != 2) {
        const double z = val(rng);
        s = kf_update(s, z, n);
        d = dense_update(d, z, n);
      }
      ASSERT_NEAR(s.alpha, d.x(0), 1e-9 * std::max(1.0, std::abs(d.x(0))));
      ASSERT_NEAR(s.alpha_dot, d.x(1), 1e-9 * std::max(1.0, std::abs(d.x(1))));
      ASSERT_NEAR(s.P.p00, d.P(0, 0), 1e-9 * d.P(0, 0));
      ASSERT_NEAR(s.P.p01, d.P(0, 1), 1e-9 * std::max(1.0, std::abs(d.P(0, 1))));
      ASSERT_NEAR(s.P.p11, d.P(1, 1), 1e-9 * d.P(1, 1));
    }
  }
}

TEST(Kalman, CovarianceStaysPositiveDefinite) {
  EstimatorState s;
  const KalmanNoise n{1e-6, 1e-6, 1e-3};
  for (int i = 0; i < 100000; ++i) {
    s = kf_predict(s, 0.0, 1000, n);
    s = kf_update(s, 0.0, n);
    ASSERT_TRUE(s.P.positive_definite()) << i;
  }
}

TEST(Kalman, ConvergesOnARamp) {
  EstimatorState s;
  const KalmanNoise n;
  for (Micros t = 1000; t <= 500000; t += 1000) {
    s = kf_predict(s, 0.0, 1000, n);
    s = kf_update(s, 200.0 * t * 1e-6, n);
  }
  EXPECT_NEAR(s.alpha, 100.0, 0.5);
  EXPECT_NEAR(s.alpha_dot, 200.0, 5.0);
}

TEST(Kalman, PredictIntegratesInput) {
  EstimatorState s;
  s.alpha = 10;
  s.alpha_dot = 100;
  s = kf_predict(s, 50.0, 10000);
  EXPECT_DOUBLE_EQ(s.alpha, 11.0);
  EXPECT_DOUBLE_EQ(s.alpha_dot, 150.0);
  EXPECT_EQ(s.t, 10000);
}

TEST(Kalman, Validation) {
  EXPECT_THROW(kf_predict(EstimatorState{}, 0.0, 0), ContractViolation);
  KalmanNoise bad;
  bad.r_angle = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}
