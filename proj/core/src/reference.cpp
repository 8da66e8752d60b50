#include "evtrack/reference.hpp"

#include <algorithm>
#include <cmath>

#include "evtrack/error.hpp"

namespace evtrack {

ReferenceKind parse_reference_kind(std::string_view name) {
  if (name == "step") return ReferenceKind::step;
  if (name == "sine") return ReferenceKind::sine;
  if (name == "constant_rate") return ReferenceKind::constant_rate;
  if (name == "chirp") return ReferenceKind::chirp;
  if (name == "manual") return ReferenceKind::manual;
  throw ConfigError("unknown reference kind '" + std::string(name) + "'");
}

std::string_view to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::step: return "step";
    case ReferenceKind::sine: return "sine";
    case ReferenceKind::constant_rate: return "constant_rate";
    case ReferenceKind::chirp: return "chirp";
    case ReferenceKind::manual: return "manual";
  }
  return "?";
}

void ReferenceParams::validate(ReferenceKind kind) const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(amplitude) || !finite(omega) || !finite(rate) || !finite(offset) ||
      !finite(omega_end) || !finite(chirp_duration)) {
    throw ConfigError("reference: parameters must be finite");
  }
  if ((kind == ReferenceKind::sine || kind == ReferenceKind::chirp) && omega < 0.0) {
    throw ConfigError("reference: omega must be >= 0");
  }
  if (kind == ReferenceKind::chirp && (!(chirp_duration > 0.0) || omega_end < 0.0)) {
    throw ConfigError("reference: chirp needs chirp_duration > 0 and omega_end >= 0");
  }
  if (onset < 0) throw ConfigError("reference: onset must be >= 0");
}

namespace {

double chirp_phase(const ReferenceParams& p, double s) {
  const double span = std::min(s, p.chirp_duration);
  const double sweep = (p.omega_end - p.omega) / p.chirp_duration;
  double phase = p.omega * span + 0.5 * sweep * span * span;
  if (s > p.chirp_duration) phase += p.omega_end * (s - p.chirp_duration);
  return phase;
}

}  // namespace

double reference_signal(ReferenceKind kind, const ReferenceParams& params, Micros t,
                        const ManualChannel* manual) {
  if (kind == ReferenceKind::manual) return manual != nullptr ? manual->latest() : 0.0;
  if (t < params.onset) return params.offset;
  const double s = micros_to_seconds(t - params.onset);
  switch (kind) {
    case ReferenceKind::step: return params.offset + params.amplitude;
    case ReferenceKind::sine: return params.offset + params.amplitude * std::sin(params.omega * s);
    case ReferenceKind::constant_rate: return params.offset + params.rate * s;
    case ReferenceKind::chirp:
      return params.offset + params.amplitude * std::sin(chirp_phase(params, s));
    case ReferenceKind::manual: break;
  }
  return params.offset;
}

double reference_rate(ReferenceKind kind, const ReferenceParams& params, Micros t) {
  if (t < params.onset) return 0.0;
  const double s = micros_to_seconds(t - params.onset);
  switch (kind) {
    case ReferenceKind::sine:
      return params.amplitude * params.omega * std::cos(params.omega * s);
    case ReferenceKind::constant_rate: return params.rate;
    case ReferenceKind::chirp: {
      const double inst = s < params.chirp_duration
                              ? params.omega + (params.omega_end - params.omega) * s / params.chirp_duration
                              : params.omega_end;
      return params.amplitude * inst * std::cos(chirp_phase(params, s));
    }
    case ReferenceKind::step:
    case ReferenceKind::manual: return 0.0;
  }
  return 0.0;
}

}  // namespace evtrack
