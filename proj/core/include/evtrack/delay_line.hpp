#pragma once

#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evtrack/error.hpp"
#include "evtrack/units.hpp"

namespace evtrack {

/// Fixed transport latency. Every payload pushed at time t is released by the
/// first pop() whose time is >= t + delay, in insertion order.
///
/// Push times and pop times are each required to be non-decreasing; a
/// regression raises FaultError. The most recently released payload is kept
/// so zero-order-hold channels (motor commands, encoder readings) can read it
/// between releases via latest().
template <typename T>
class DelayLine {
 public:
  explicit DelayLine(Micros delay = 0) : delay_(delay) {
    if (delay < 0) throw ConfigError("delay line: negative delay");
  }

  Micros delay() const { return delay_; }
  std::size_t pending() const { return entries_.size(); }
  const std::optional<T>& latest() const { return latest_; }

  void push(Micros t, T payload) {
    if (t < last_push_) {
      throw FaultError("delay line: push time regressed from " + std::to_string(last_push_) +
                       " to " + std::to_string(t));
    }
    last_push_ = t;
    entries_.emplace_back(t + delay_, std::move(payload));
  }

  /// Calls sink(payload) for every entry with release time <= t.
  template <typename Sink>
  std::size_t pop_into(Micros t, Sink&& sink) {
    check_pop_time(t);
    std::size_t n = 0;
    while (!entries_.empty() && entries_.front().first <= t) {
      latest_ = entries_.front().second;
      sink(std::move(entries_.front().second));
      entries_.pop_front();
      ++n;
    }
    return n;
  }

  std::vector<T> pop(Micros t) {
    std::vector<T> out;
    pop_into(t, [&out](T&& v) { out.push_back(std::move(v)); });
    return out;
  }

  /// Releases everything due at t and returns the held value.
  const std::optional<T>& hold(Micros t) {
    check_pop_time(t);
    while (!entries_.empty() && entries_.front().first <= t) {
      latest_ = std::move(entries_.front().second);
      entries_.pop_front();
    }
    return latest_;
  }

 private:
  void check_pop_time(Micros t) {
    if (t < last_pop_) {
      throw FaultError("delay line: pop time regressed from " + std::to_string(last_pop_) +
                       " to " + std::to_string(t));
    }
    last_pop_ = t;
  }

  Micros delay_;
  Micros last_push_ = std::numeric_limits<Micros>::min();
  Micros last_pop_ = std::numeric_limits<Micros>::min();
  std::deque<std::pair<Micros, T>> entries_;
  std::optional<T> latest_;
};

}  // namespace evtrack
