#include "evtrack/controller.hpp"

#include <algorithm>
#include <cmath>

#include "evtrack/error.hpp"

namespace evtrack {

ControllerGains gains_from(double tau, double zeta, double inertia) {
  if (!(tau > 0.0) || !(zeta > 0.0) || !(inertia > 0.0)) {
    throw ConfigError("gains_from: tau, zeta and inertia must be > 0");
  }
  ControllerGains g;
  g.k_p = inertia / (tau * tau);
  g.k_d = 2.0 * zeta * inertia / tau;
  g.tau = tau;
  g.zeta = zeta;
  g.inertia = inertia;
  return g;
}

double pd_torque(double alpha, double alpha_dot, double alpha_des, double alpha_dot_des,
                 const ControllerGains& gains) {
  return gains.k_p * (alpha_des - alpha) + gains.k_d * (alpha_dot_des - alpha_dot);
}

ThrustCommand allocate(double torque, const PlantParams& params) {
  const double half = 0.5 * torque / params.arm;
  const double raw1 = params.bias_thrust + half;
  const double raw2 = params.bias_thrust - half;
  ThrustCommand cmd;
  cmd.f1 = std::clamp(raw1, 0.0, params.max_thrust);
  cmd.f2 = std::clamp(raw2, 0.0, params.max_thrust);
  cmd.saturated = cmd.f1 != raw1 || cmd.f2 != raw2;
  return cmd;
}

void ThrustMap::validate() const {
  if (!(c2 > 0.0) || !(c1 >= 0.0)) throw ConfigError("thrust map: need c2 > 0 and c1 >= 0");
}

DutyCommand thrust_to_duty(double thrust, const ThrustMap& map) {
  if (!(thrust > 0.0)) return {0.0, thrust < 0.0};
  const double full = map.thrust(1.0);
  if (thrust > full) return {1.0, true};
  // Root of c2 d^2 + c1 d - f = 0 in the cancellation-free form.
  const double d = 2.0 * thrust / (map.c1 + std::sqrt(map.c1 * map.c1 + 4.0 * map.c2 * thrust));
  return {std::clamp(d, 0.0, 1.0), false};
}

}  // namespace evtrack
