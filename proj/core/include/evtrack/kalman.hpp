#pragma once

#include "evtrack/units.hpp"

namespace evtrack {

/// Symmetric 2x2 covariance stored as its upper triangle.
struct Covariance2 {
  double p00 = 0.0;
  double p01 = 0.0;
  double p11 = 0.0;

  double determinant() const { return p00 * p11 - p01 * p01; }
  bool positive_definite() const { return p00 > 0.0 && p11 > 0.0 && determinant() > 0.0; }
};

/// Constant-velocity filter state in degrees.
struct EstimatorState {
  double alpha = 0.0;      ///< relative roll [deg]
  double alpha_dot = 0.0;  ///< relative roll rate [deg/s]
  Covariance2 P{25.0, 0.0, 1e6};
  Micros t = 0;
};

/// Per-step noise: process covariance diag(q_angle, q_rate) and measurement
/// variance r_angle, all in degree units.
struct KalmanNoise {
  double q_angle = 1.0;
  double q_rate = 10000.0;
  double r_angle = 10.0;

  void validate() const;
};

/// Propagates alpha += alpha_dot * dt, alpha_dot += u and P <- A P A^T + Q.
/// u is the velocity increment commanded over the step [deg/s].
EstimatorState kf_predict(const EstimatorState& s, double u_deg_s, Micros dt,
                          const KalmanNoise& noise = {});

/// Corrects with an angle measurement z [deg] (H = [1 0]). The posterior
/// covariance uses the Joseph form so it stays symmetric positive definite.
EstimatorState kf_update(const EstimatorState& s, double z_deg, const KalmanNoise& noise = {});

}  // namespace evtrack
