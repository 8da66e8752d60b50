#pragma once

#include <optional>
#include <span>

#include "evtrack/camera.hpp"
#include "evtrack/hough.hpp"
#include "evtrack/kalman.hpp"

namespace evtrack {

struct EstimatorConfig {
  HoughConfig hough;
  KalmanNoise noise;
  Covariance2 initial_cov{25.0, 0.0, 1e6};
  /// Expected transport latency of the event stream. Window ageing runs on
  /// the sensor clock, now - event_latency, so delayed events are not
  /// discarded on arrival.
  Micros event_latency = 0;

  void validate() const;
};

struct TickResult {
  EstimatorState state;
  bool initialized = false;
  bool advanced = false;  ///< false for a repeated tick at the same time
  std::optional<AngleMeasurement> measurement;
  double compute_us = 0.0;  ///< wall-clock time spent inside tick()
};

/// Hough line measurement feeding the two-state Kalman filter, run once per
/// control tick.
///
/// Until the first accepted measurement (or an explicit prime()) the
/// estimator is uninitialized: it keeps buffering events but reports no
/// usable state.
class HorizonEstimator {
 public:
  explicit HorizonEstimator(EstimatorConfig config = {});

  /// Starts the filter from a known alignment instead of waiting for the
  /// first line detection.
  void prime(double alpha_deg, double alpha_dot_deg_s, Micros t);

  /// Inserts the released events (any order), maintains the window,
  /// predicts to `now` with input u and corrects when a line is found.
  /// Calling again with the same `now` changes nothing.
  TickResult tick(std::span<const Event> new_events, double u_deg_s, Micros now);

  bool initialized() const { return initialized_; }
  const EstimatorState& state() const { return state_; }
  const HoughWindow& window() const { return window_; }
  const EstimatorConfig& config() const { return config_; }

 private:
  EstimatorConfig config_;
  HoughWindow window_;
  EstimatorState state_;
  bool initialized_ = false;
  std::optional<Micros> last_tick_;
  std::vector<Event> scratch_;
};

}  // namespace evtrack
