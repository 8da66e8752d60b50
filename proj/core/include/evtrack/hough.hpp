#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "evtrack/camera.hpp"
#include "evtrack/units.hpp"

namespace evtrack {

struct HoughConfig {
  std::size_t capacity = 80;  ///< maximum number of buffered events
  Micros span = 3000;         ///< maximum age of a buffered event
  int min_line_count = 40;    ///< peak votes required to report a line
  double cx = 120.0;          ///< origin of the rho axis, sensor column
  double cy = 90.0;           ///< origin of the rho axis, sensor row
};

/// A detected horizon line.
struct AngleMeasurement {
  double theta_deg = 0.0;  ///< centre of the winning theta bin
  double rho_px = 0.0;     ///< centre of the winning rho bin
  int count = 0;           ///< votes in the winning bin
  double z_deg = 0.0;      ///< relative roll implied by theta, unwrapped
};

/// Sliding-window Hough accumulator over the most recent events.
///
/// Theta bins are centred on 0, 5, ..., 175 deg. Rho bins are centred on
/// -150, -145, ..., +150 px so that lines through the origin fall in the
/// middle of a bin instead of straddling an edge. Each event votes once per
/// theta column and the accumulator is kept equal to a from-scratch rebuild
/// of the buffer.
class HoughWindow {
 public:
  static constexpr int kThetaBins = 36;
  static constexpr double kThetaStepDeg = 5.0;
  static constexpr int kRhoBins = 61;
  static constexpr double kRhoStep = 5.0;
  static constexpr double kRhoMax = 150.0;

  using Accumulator = std::array<std::array<int, kRhoBins>, kThetaBins>;

  explicit HoughWindow(HoughConfig config = {});

  const HoughConfig& config() const { return config_; }
  const std::deque<Event>& events() const { return buffer_; }
  const Accumulator& accumulator() const { return acc_; }
  int count(int theta_index, int rho_index) const { return acc_[theta_index][rho_index]; }
  /// Votes in the strongest bin, gated or not.
  int max_count() const;

  /// Votes for e and appends it. Requires e.t >= newest buffered timestamp
  /// (ContractViolation otherwise). A rho outside the binned span raises
  /// FaultError and leaves the window unchanged.
  void insert(const Event& e);

  /// Drops the oldest buffered event and withdraws its votes.
  Event evict_oldest();

  /// Evicts events older than now - span, then the oldest ones until at most
  /// `capacity` remain. Returns the evicted events, oldest first.
  std::vector<Event> maintain(Micros now);

  /// Strongest line, or nothing when the best bin has fewer than
  /// min_line_count votes. Equal-count bins are ranked by how close their
  /// implied roll is to predicted_alpha_deg, then by lowest theta index.
  std::optional<AngleMeasurement> peak(double predicted_alpha_deg) const;

  /// Accumulator computed from scratch for an arbitrary event set.
  Accumulator rebuild() const;

  static double theta_deg(int theta_index) { return theta_index * kThetaStepDeg; }
  static double rho_center(int rho_index) { return -kRhoMax + rho_index * kRhoStep; }
  /// Bin index for rho, or -1 when outside the binned span.
  static int rho_index(double rho);

  /// Relative roll implied by a line normal at theta_deg, shifted by the
  /// multiple of 180 deg nearest to predicted_deg.
  static double unwrap_roll(double theta_deg, double predicted_deg);

 private:
  void vote(const Event& e, int delta);
  bool rho_bins(const Event& e, std::array<int, kThetaBins>& bins) const;

  HoughConfig config_;
  Accumulator acc_{};
  std::deque<Event> buffer_;
  std::array<double, kThetaBins> cos_{};
  std::array<double, kThetaBins> sin_{};
};

}  // namespace evtrack
