#pragma once

#include <cstdint>
#include <numbers>

namespace evtrack {

/// Simulation clock tick. Every timestamp in the project is an integer
/// number of microseconds since the start of a run.
using Micros = std::int64_t;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }
constexpr double micros_to_seconds(Micros us) { return static_cast<double>(us) * 1e-6; }

}  // namespace evtrack
