#pragma once

#include <cstdint>

#include "evtrack/units.hpp"

namespace evtrack {

/// Physical constants of the one-axis dualcopter rig. SI units throughout.
struct PlantParams {
  double inertia = 0.00788;   ///< moment of inertia about the roll axis [kg m^2]
  double arm = 0.15;          ///< half rotor separation [m]
  double motor_tau = 0.020;   ///< first-order rotor thrust lag [s]; 0 = instantaneous
  double max_thrust = 4.0;    ///< per-rotor thrust ceiling [N]
  double bias_thrust = 2.0;   ///< per-rotor operating point [N]
  double disturbance = 0.0;   ///< constant imbalance torque [N m]

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Ground truth of the rig at one instant.
struct WorldState {
  Micros t = 0;
  double alpha = 0.0;       ///< dualcopter roll [rad], multi-turn
  double alpha_dot = 0.0;   ///< roll rate [rad/s]
  double disk_angle = 0.0;  ///< reference horizon angle [rad], multi-turn
  double f1 = 0.0;
  double f2 = 0.0;
  double f1_cmd = 0.0;
  double f2_cmd = 0.0;

  /// Rotor thrusts and commands sitting at the bias operating point.
  static WorldState at_rest(const PlantParams& params);
};

/// Advances the rig by dt with semi-implicit Euler.
///
/// The rotor lag is integrated with its exact zero-order-hold factor
/// 1 - exp(-dt/tau), which reduces to an instantaneous response for tau = 0.
/// Thrusts are clamped to [0, max_thrust] after the lag update. The disk
/// angle is kinematic and left untouched. Throws FaultError when the result
/// is not finite and ContractViolation for dt <= 0.
WorldState step_physics(const WorldState& state, Micros dt, const PlantParams& params);

enum class EncoderChannel { dualcopter, disk };

/// Absolute rotary encoders on the dualcopter and the disk: 0.1 deg
/// resolution and a calibration bias frozen for the whole run.
class Encoder {
 public:
  static constexpr double kResolutionDeg = 0.1;
  static constexpr double kMaxBiasDeg = 0.2;

  Encoder() = default;
  Encoder(double dualcopter_bias_deg, double disk_bias_deg);

  /// Biases drawn uniformly from [-0.2, 0.2] deg.
  static Encoder with_random_bias(std::uint64_t seed);

  /// Reading in degrees, multi-turn.
  double read(const WorldState& state, EncoderChannel which) const;

  double bias_deg(EncoderChannel which) const;

 private:
  double dualcopter_bias_deg_ = 0.0;
  double disk_bias_deg_ = 0.0;
};

/// Rounds (angle + bias) to the encoder grid.
double quantize_encoder(double angle_deg, double bias_deg);

}  // namespace evtrack
