#include "evtrack/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "evtrack/error.hpp"

namespace evtrack {

bool event_before(const Event& a, const Event& b) {
  return std::tie(a.t, a.y, a.x, a.polarity) < std::tie(b.t, b.y, b.x, b.polarity);
}

void CameraModel::validate() const {
  if (width <= 0 || height <= 0 || width > 65535 || height > 65535) {
    throw ConfigError("camera: width/height must be in [1, 65535]");
  }
  if (!(disk_radius > 0.0) || disk_radius > std::min(width, height) / 2.0) {
    throw ConfigError("camera: disk_radius must be in (0, min(width, height)/2]");
  }
  if (!(noise_rate >= 0.0)) throw ConfigError("camera: noise_rate must be >= 0");
  if (refractory < 0) throw ConfigError("camera: refractory must be >= 0");
}

namespace {

// Signed distance of a pixel to the horizon, positive on the white side.
double signed_distance(const CameraModel& m, double rel_angle, int x, int y) {
  const double u = x - m.cx;
  const double v = m.cy - y;
  return -u * std::sin(rel_angle) + v * std::cos(rel_angle);
}

bool inside_disk(const CameraModel& m, int x, int y) {
  const double u = x - m.cx;
  const double v = m.cy - y;
  return u * u + v * v <= m.disk_radius * m.disk_radius;
}

}  // namespace

PixelClass pixel_intensity(const CameraModel& model, double rel_angle, int x, int y) {
  if (!inside_disk(model, x, y)) return PixelClass::outside;
  return signed_distance(model, rel_angle, x, y) >= 0.0 ? PixelClass::white : PixelClass::black;
}

EventCamera::EventCamera(const CameraModel& model, std::uint64_t seed)
    : model_(model),
      last_event_(static_cast<std::size_t>(model.width) * model.height,
                  std::numeric_limits<Micros>::min()),
      rng_(seed) {
  model_.validate();
  for (int y = 0; y < model_.height; ++y) {
    for (int x = 0; x < model_.width; ++x) {
      if (!inside_disk(model_, x, y)) continue;
      const double u = x - model_.cx;
      const double v = model_.cy - y;
      if (u == 0.0 && v == 0.0) continue;  // on every horizon, never flips
      double phase = std::atan2(v, u);
      phase = std::fmod(phase + 2.0 * kPi, kPi);
      if (phase >= kPi) phase -= kPi;
      by_phase_.push_back({phase, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)});
    }
  }
  std::sort(by_phase_.begin(), by_phase_.end(), [](const PixelPhase& a, const PixelPhase& b) {
    return std::tie(a.phase, a.y, a.x) < std::tie(b.phase, b.y, b.x);
  });
}

std::vector<Event> EventCamera::generate(double from, double to, Micros t0, Micros t1) {
  std::vector<Event> out;
  generate_into(from, to, t0, t1, out);
  return out;
}

void EventCamera::generate_into(double from, double to, Micros t0, Micros t1, std::vector<Event>& out) {
  if (t1 <= t0) throw ContractViolation("generate_events: t1 must be greater than t0");
  if (!(std::abs(to - from) < kPi / 2.0)) {
    throw ContractViolation("generate_events: sweep must be shorter than pi/2");
  }
  const std::size_t first = out.size();
  emit_sweep(from, to, t0, t1, out);
  emit_noise(t0, t1, out);
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(), event_before);

  // Refractory filtering has to run in time order.
  auto keep = out.begin() + static_cast<std::ptrdiff_t>(first);
  for (auto it = keep; it != out.end(); ++it) {
    if (accept(it->x, it->y, it->t)) *keep++ = *it;
  }
  out.erase(keep, out.end());
}

bool EventCamera::accept(std::uint16_t x, std::uint16_t y, Micros t) {
  Micros& last = last_event_[static_cast<std::size_t>(y) * model_.width + x];
  if (last != std::numeric_limits<Micros>::min() && t - last < model_.refractory) return false;
  last = t;
  return true;
}

void EventCamera::emit_sweep(double from, double to, Micros t0, Micros t1, std::vector<Event>& out) {
  if (from == to) return;
  // A pixel with polar angle phi flips when the horizon passes phi (mod pi).
  // Collect candidates whose phase falls in the swept arc, padded so pixels
  // sitting on either boundary line are re-checked exactly below.
  constexpr double kPad = 1e-9;
  const double lo = std::min(from, to) - kPad;
  const double hi = std::max(from, to) + kPad;
  const double base = std::floor(lo / kPi) * kPi;
  const double a = lo - base;  // in [0, pi)
  const double b = hi - base;  // in (a, a + pi)

  auto by_key = [](const PixelPhase& p, double key) { return p.phase < key; };
  auto emit_range = [&](double key_lo, double key_hi, double shift) {
    auto it = std::lower_bound(by_phase_.begin(), by_phase_.end(), key_lo, by_key);
    const double span = to - from;
    const double dt = static_cast<double>(t1 - t0);
    for (; it != by_phase_.end() && it->phase <= key_hi; ++it) {
      const PixelClass before = pixel_intensity(model_, from, it->x, it->y);
      const PixelClass after = pixel_intensity(model_, to, it->x, it->y);
      if (before == after) continue;
      const double crossing = base + shift + it->phase;
      const double frac = std::clamp((crossing - from) / span, 0.0, 1.0);
      Micros t = t0 + static_cast<Micros>(std::floor(frac * dt));
      t = std::min(t, t1 - 1);
      out.push_back({it->x, it->y, static_cast<std::int8_t>(after == PixelClass::white ? 1 : -1), t});
    }
  };

  emit_range(a, std::min(b, kPi), 0.0);
  if (b >= kPi) emit_range(0.0, b - kPi, kPi);
}

void EventCamera::emit_noise(Micros t0, Micros t1, std::vector<Event>& out) {
  if (model_.noise_rate <= 0.0) return;
  const double mean = model_.noise_rate * micros_to_seconds(t1 - t0);
  std::poisson_distribution<long> count_dist(mean);
  const long n = count_dist(rng_);
  std::uniform_int_distribution<int> xs(0, model_.width - 1);
  std::uniform_int_distribution<int> ys(0, model_.height - 1);
  std::uniform_int_distribution<Micros> ts(t0, t1 - 1);
  std::bernoulli_distribution positive(0.5);
  for (long i = 0; i < n; ++i) {
    Event e;
    e.x = static_cast<std::uint16_t>(xs(rng_));
    e.y = static_cast<std::uint16_t>(ys(rng_));
    e.t = ts(rng_);
    e.polarity = positive(rng_) ? 1 : -1;
    out.push_back(e);
  }
}

}  // namespace evtrack
