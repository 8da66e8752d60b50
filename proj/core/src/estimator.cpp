#include "evtrack/estimator.hpp"

#include <algorithm>
#include <chrono>

#include "evtrack/error.hpp"

namespace evtrack {

void EstimatorConfig::validate() const {
  noise.validate();
  if (!initial_cov.positive_definite()) throw ConfigError("estimator: initial covariance not positive definite");
  if (event_latency < 0) throw ConfigError("estimator: event_latency must be >= 0");
  HoughWindow probe(hough);
  (void)probe;
}

HorizonEstimator::HorizonEstimator(EstimatorConfig config) : config_(config), window_(config.hough) {
  config_.validate();
  state_.P = config_.initial_cov;
}

void HorizonEstimator::prime(double alpha_deg, double alpha_dot_deg_s, Micros t) {
  state_ = EstimatorState{alpha_deg, alpha_dot_deg_s, config_.initial_cov, t};
  initialized_ = true;
}

TickResult HorizonEstimator::tick(std::span<const Event> new_events, double u_deg_s, Micros now) {
  const auto start = std::chrono::steady_clock::now();
  TickResult result;
  if (last_tick_ && now <= *last_tick_) {
    if (now < *last_tick_) throw FaultError("estimator: tick time regressed");
    result.state = state_;
    result.initialized = initialized_;
    return result;
  }
  last_tick_ = now;
  result.advanced = true;

  scratch_.assign(new_events.begin(), new_events.end());
  std::sort(scratch_.begin(), scratch_.end(), event_before);
  for (const Event& e : scratch_) window_.insert(e);
  window_.maintain(now - config_.event_latency);

  if (initialized_) {
    if (now > state_.t) state_ = kf_predict(state_, u_deg_s, now - state_.t, config_.noise);
    result.measurement = window_.peak(state_.alpha);
    if (result.measurement) state_ = kf_update(state_, result.measurement->z_deg, config_.noise);
  } else {
    result.measurement = window_.peak(0.0);
    if (result.measurement) {
      state_ = EstimatorState{result.measurement->z_deg, 0.0, config_.initial_cov, now};
      initialized_ = true;
    }
  }

  result.state = state_;
  result.initialized = initialized_;
  result.compute_us =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace evtrack
