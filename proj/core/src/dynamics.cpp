#include "evtrack/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evtrack/error.hpp"

namespace evtrack {

void PlantParams::validate() const {
  if (!(inertia > 0.0)) throw ConfigError("plant: inertia must be > 0");
  if (!(arm > 0.0)) throw ConfigError("plant: arm must be > 0");
  if (!(motor_tau >= 0.0)) throw ConfigError("plant: motor_tau must be >= 0");
  if (!(max_thrust > 0.0)) throw ConfigError("plant: max_thrust must be > 0");
  if (!(bias_thrust >= 0.0 && bias_thrust <= max_thrust)) {
    throw ConfigError("plant: bias_thrust must lie in [0, max_thrust]");
  }
  if (!std::isfinite(disturbance)) throw ConfigError("plant: disturbance must be finite");
}

WorldState WorldState::at_rest(const PlantParams& params) {
  WorldState s;
  s.f1 = s.f2 = s.f1_cmd = s.f2_cmd = params.bias_thrust;
  return s;
}

WorldState step_physics(const WorldState& state, Micros dt, const PlantParams& params) {
  if (dt <= 0) throw ContractViolation("step_physics: dt must be > 0");
  const double h = micros_to_seconds(dt);

  WorldState next = state;
  const double blend = params.motor_tau > 0.0 ? -std::expm1(-h / params.motor_tau) : 1.0;
  next.f1 = std::clamp(state.f1 + (state.f1_cmd - state.f1) * blend, 0.0, params.max_thrust);
  next.f2 = std::clamp(state.f2 + (state.f2_cmd - state.f2) * blend, 0.0, params.max_thrust);

  const double torque = (next.f1 - next.f2) * params.arm + params.disturbance;
  next.alpha_dot = state.alpha_dot + torque / params.inertia * h;
  next.alpha = state.alpha + next.alpha_dot * h;
  next.t = state.t + dt;

  if (!std::isfinite(next.alpha) || !std::isfinite(next.alpha_dot) || !std::isfinite(next.f1) ||
      !std::isfinite(next.f2)) {
    throw FaultError("step_physics: non-finite state at t=" + std::to_string(next.t) + " us");
  }
  return next;
}

double quantize_encoder(double angle_deg, double bias_deg) {
  return std::round((angle_deg + bias_deg) / Encoder::kResolutionDeg) * Encoder::kResolutionDeg;
}

Encoder::Encoder(double dualcopter_bias_deg, double disk_bias_deg)
    : dualcopter_bias_deg_(dualcopter_bias_deg), disk_bias_deg_(disk_bias_deg) {}

Encoder Encoder::with_random_bias(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> bias(-kMaxBiasDeg, kMaxBiasDeg);
  const double a = bias(rng);
  const double b = bias(rng);
  return Encoder(a, b);
}

double Encoder::read(const WorldState& state, EncoderChannel which) const {
  if (which == EncoderChannel::dualcopter) {
    return quantize_encoder(rad2deg(state.alpha), dualcopter_bias_deg_);
  }
  return quantize_encoder(rad2deg(state.disk_angle), disk_bias_deg_);
}

double Encoder::bias_deg(EncoderChannel which) const {
  return which == EncoderChannel::dualcopter ? dualcopter_bias_deg_ : disk_bias_deg_;
}

}  // namespace evtrack
