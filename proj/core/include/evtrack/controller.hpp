#pragma once

#include "evtrack/dynamics.hpp"

namespace evtrack {

/// PD gains plus the design point they were synthesized from (zeros when
/// the gains were given explicitly).
struct ControllerGains {
  double k_p = 0.0;      ///< [N m / rad]
  double k_d = 0.0;      ///< [N m s / rad]
  double tau = 0.0;      ///< [s]
  double zeta = 0.0;
  double inertia = 0.0;  ///< [kg m^2]
};

/// k_p = J / tau^2, k_d = 2 zeta J / tau. Throws ConfigError unless all
/// inputs are positive.
ControllerGains gains_from(double tau, double zeta, double inertia);

/// T* = k_p (alpha_des - alpha) + k_d (alpha_dot_des - alpha_dot), unclamped.
double pd_torque(double alpha, double alpha_dot, double alpha_des, double alpha_dot_des,
                 const ControllerGains& gains);

struct ThrustCommand {
  double f1 = 0.0;
  double f2 = 0.0;
  bool saturated = false;

  /// Torque the pair actually produces about the roll axis.
  double torque(const PlantParams& params) const { return (f1 - f2) * params.arm; }
};

/// Splits a torque into rotor thrusts around the bias operating point,
/// clamping each rotor to [0, max_thrust] independently.
ThrustCommand allocate(double torque, const PlantParams& params);

/// Rotor thrust as a quadratic in PWM duty: c2 d^2 + c1 d.
struct ThrustMap {
  double c2 = 3.0;
  double c1 = 1.0;

  double thrust(double duty) const { return (c2 * duty + c1) * duty; }
  void validate() const;
};

struct DutyCommand {
  double duty = 0.0;
  bool saturated = false;
};

/// Inverts the thrust map; thrusts outside [0, thrust(1)] are clamped to the
/// nearest end of the duty range and flagged.
DutyCommand thrust_to_duty(double thrust, const ThrustMap& map);

}  // namespace evtrack
