#include "evtrack/hough.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evtrack/error.hpp"

namespace evtrack {

HoughWindow::HoughWindow(HoughConfig config) : config_(config) {
  if (config_.capacity == 0) throw ConfigError("hough: capacity must be > 0");
  if (config_.span <= 0) throw ConfigError("hough: span must be > 0");
  if (config_.min_line_count < 1) throw ConfigError("hough: min_line_count must be >= 1");
  for (int i = 0; i < kThetaBins; ++i) {
    const double th = deg2rad(theta_deg(i));
    cos_[i] = std::cos(th);
    sin_[i] = std::sin(th);
  }
}

int HoughWindow::rho_index(double rho) {
  const double shifted = (rho + kRhoMax + 0.5 * kRhoStep) / kRhoStep;
  if (!(shifted >= 0.0)) return -1;
  const int idx = static_cast<int>(std::floor(shifted));
  return idx < kRhoBins ? idx : -1;
}

bool HoughWindow::rho_bins(const Event& e, std::array<int, kThetaBins>& bins) const {
  const double u = e.x - config_.cx;
  const double v = e.y - config_.cy;
  for (int i = 0; i < kThetaBins; ++i) {
    bins[i] = rho_index(u * cos_[i] + v * sin_[i]);
    if (bins[i] < 0) return false;
  }
  return true;
}

void HoughWindow::vote(const Event& e, int delta) {
  std::array<int, kThetaBins> bins{};
  if (!rho_bins(e, bins)) {
    throw FaultError("hough: rho out of range for event at (" + std::to_string(e.x) + ", " +
                     std::to_string(e.y) + ")");
  }
  for (int i = 0; i < kThetaBins; ++i) acc_[i][bins[i]] += delta;
}

void HoughWindow::insert(const Event& e) {
  if (!buffer_.empty() && e.t < buffer_.back().t) {
    throw ContractViolation("hough: event older than the newest buffered event");
  }
  vote(e, +1);
  buffer_.push_back(e);
}

Event HoughWindow::evict_oldest() {
  if (buffer_.empty()) throw ContractViolation("hough: evict from an empty window");
  const Event e = buffer_.front();
  vote(e, -1);
  buffer_.pop_front();
  return e;
}

std::vector<Event> HoughWindow::maintain(Micros now) {
  std::vector<Event> evicted;
  while (!buffer_.empty() && buffer_.front().t < now - config_.span) {
    evicted.push_back(evict_oldest());
  }
  while (buffer_.size() > config_.capacity) evicted.push_back(evict_oldest());
  return evicted;
}

double HoughWindow::unwrap_roll(double theta, double predicted_deg) {
  double z = 90.0 - theta;
  while (z <= -90.0) z += 180.0;
  while (z > 90.0) z -= 180.0;
  return z + 180.0 * std::round((predicted_deg - z) / 180.0);
}

int HoughWindow::max_count() const {
  int best = 0;
  for (const auto& column : acc_) {
    for (int c : column) best = std::max(best, c);
  }
  return best;
}

std::optional<AngleMeasurement> HoughWindow::peak(double predicted_alpha_deg) const {
  const int best = max_count();
  if (best < config_.min_line_count) return std::nullopt;

  std::optional<AngleMeasurement> out;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kThetaBins; ++i) {
    for (int j = 0; j < kRhoBins; ++j) {
      if (acc_[i][j] != best) continue;
      const double z = unwrap_roll(theta_deg(i), predicted_alpha_deg);
      const double distance = std::abs(z - predicted_alpha_deg);
      if (distance < best_distance) {
        best_distance = distance;
        out = AngleMeasurement{theta_deg(i), rho_center(j), best, z};
      }
    }
  }
  return out;
}

HoughWindow::Accumulator HoughWindow::rebuild() const {
  HoughWindow scratch(config_);
  for (const Event& e : buffer_) scratch.vote(e, +1);
  return scratch.acc_;
}

}  // namespace evtrack
