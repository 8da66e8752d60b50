#include "evtrack/kalman.hpp"

#include "evtrack/error.hpp"

namespace evtrack {

void KalmanNoise::validate() const {
  if (!(q_angle >= 0.0) || !(q_rate >= 0.0)) throw ConfigError("kalman: process noise must be >= 0");
  if (!(r_angle > 0.0)) throw ConfigError("kalman: measurement noise must be > 0");
}

EstimatorState kf_predict(const EstimatorState& s, double u_deg_s, Micros dt, const KalmanNoise& noise) {
  if (dt <= 0) throw ContractViolation("kf_predict: dt must be > 0");
  const double h = micros_to_seconds(dt);
  EstimatorState out = s;
  out.alpha = s.alpha + s.alpha_dot * h;
  out.alpha_dot = s.alpha_dot + u_deg_s;

  const Covariance2& P = s.P;
  out.P.p00 = P.p00 + 2.0 * h * P.p01 + h * h * P.p11 + noise.q_angle;
  out.P.p01 = P.p01 + h * P.p11;
  out.P.p11 = P.p11 + noise.q_rate;
  out.t = s.t + dt;
  return out;
}

EstimatorState kf_update(const EstimatorState& s, double z_deg, const KalmanNoise& noise) {
  const Covariance2& P = s.P;
  const double r = noise.r_angle;
  const double innovation_var = P.p00 + r;
  const double k0 = P.p00 / innovation_var;
  const double k1 = P.p01 / innovation_var;
  const double innovation = z_deg - s.alpha;

  EstimatorState out = s;
  out.alpha = s.alpha + k0 * innovation;
  out.alpha_dot = s.alpha_dot + k1 * innovation;

  // (I - K H) P (I - K H)^T + K R K^T
  const double m00 = (1.0 - k0) * P.p00;
  const double m01 = (1.0 - k0) * P.p01;
  const double m10 = P.p01 - k1 * P.p00;
  const double m11 = P.p11 - k1 * P.p01;
  out.P.p00 = m00 * (1.0 - k0) + r * k0 * k0;
  out.P.p01 = m01 - m00 * k1 + r * k0 * k1;
  out.P.p11 = m11 - m10 * k1 + r * k1 * k1;
  return out;
}

}  // namespace evtrack
