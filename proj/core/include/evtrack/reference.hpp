#pragma once

#include <atomic>
#include <string>
#include <string_view>

#include "evtrack/units.hpp"

namespace evtrack {

enum class ReferenceKind { step, sine, constant_rate, chirp, manual };

ReferenceKind parse_reference_kind(std::string_view name);
std::string_view to_string(ReferenceKind kind);

/// Shape parameters for reference trajectories. Angles in radians.
struct ReferenceParams {
  double amplitude = 0.0;       ///< step height / sine and chirp amplitude [rad]
  double omega = 0.0;           ///< sine frequency, chirp start frequency [rad/s]
  double omega_end = 0.0;       ///< chirp end frequency [rad/s]
  double chirp_duration = 1.0;  ///< chirp sweep length [s]
  double rate = 0.0;            ///< constant_rate slope [rad/s]
  double offset = 0.0;          ///< added to every kind except manual [rad]
  Micros onset = 0;             ///< reference is `offset` before this time

  void validate(ReferenceKind kind) const;
};

/// Latest-value mailbox for the live steering channel. One producer (the
/// transport side) stores, one consumer (the loop) loads; the value holds
/// until the next store.
class ManualChannel {
 public:
  explicit ManualChannel(double initial = 0.0) : angle_(initial) {}
  void push(double angle_rad) { angle_.store(angle_rad, std::memory_order_release); }
  double latest() const { return angle_.load(std::memory_order_acquire); }

 private:
  std::atomic<double> angle_;
};

/// Reference angle [rad] at time t. `manual` reads the channel (0 when none).
double reference_signal(ReferenceKind kind, const ReferenceParams& params, Micros t,
                        const ManualChannel* manual = nullptr);

/// Time derivative of the reference [rad/s]; 0 for step and manual.
double reference_rate(ReferenceKind kind, const ReferenceParams& params, Micros t);

}  // namespace evtrack
