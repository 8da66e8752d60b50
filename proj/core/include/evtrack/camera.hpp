#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "evtrack/units.hpp"

namespace evtrack {

/// One brightness-change detection.
struct Event {
  std::uint16_t x = 0;        ///< column, [0, width)
  std::uint16_t y = 0;        ///< row, [0, height), growing downwards
  std::int8_t polarity = 1;   ///< +1 darker-to-brighter, -1 brighter-to-darker
  Micros t = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Strict weak order used everywhere events are sorted: time, then row,
/// column and polarity so equal-time events have one canonical order.
bool event_before(const Event& a, const Event& b);

/// Sensor geometry and the black/white disk drawn on it.
struct CameraModel {
  int width = 240;
  int height = 180;
  double cx = 120.0;          ///< disk centre column
  double cy = 90.0;           ///< disk centre row
  double disk_radius = 90.0;  ///< [px]
  double noise_rate = 5000.0; ///< background events per second over the whole sensor
  Micros refractory = 100;    ///< per-pixel dead time after an event

  void validate() const;
};

enum class PixelClass { black, white, outside };

/// Classifies pixel (x, y) for a horizon rotated by rel_angle [rad],
/// counter-clockwise positive. At rel_angle = 0 the half above the centre
/// (smaller row index) is white. Pixels exactly on the line count as white.
PixelClass pixel_intensity(const CameraModel& model, double rel_angle, int x, int y);

/// Binary-flip event sensor looking at the disk.
///
/// Owns the per-pixel refractory memory and the noise random source, so a
/// sequence of generate() calls behaves like one continuous recording.
class EventCamera {
 public:
  EventCamera(const CameraModel& model, std::uint64_t seed);

  const CameraModel& model() const { return model_; }

  /// Events caused by the horizon sweeping from `from` to `to` [rad] while
  /// the clock runs over [t0, t1). Requires t1 > t0 and a sweep shorter than
  /// pi/2 (ContractViolation otherwise). Output is sorted with event_before.
  std::vector<Event> generate(double from, double to, Micros t0, Micros t1);

  /// Same as generate() but appends to `out`; only the appended part is sorted.
  void generate_into(double from, double to, Micros t0, Micros t1, std::vector<Event>& out);

  /// Number of pixels inside the disk (excluding the exact centre pixel).
  std::size_t inside_pixel_count() const { return by_phase_.size(); }

 private:
  struct PixelPhase {
    double phase;  ///< polar angle of the pixel modulo pi, in [0, pi)
    std::uint16_t x;
    std::uint16_t y;
  };

  void emit_sweep(double from, double to, Micros t0, Micros t1, std::vector<Event>& out);
  void emit_noise(Micros t0, Micros t1, std::vector<Event>& out);
  bool accept(std::uint16_t x, std::uint16_t y, Micros t);

  CameraModel model_;
  std::vector<PixelPhase> by_phase_;
  std::vector<Micros> last_event_;
  std::mt19937_64 rng_;
};

}  // namespace evtrack
