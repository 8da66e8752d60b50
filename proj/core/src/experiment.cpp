#include "evtrack/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evtrack/error.hpp"

namespace evtrack {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kEncoderSeedSalt = 0x9e3779b97f4a7c15ULL;

EstimatorConfig with_latency(EstimatorConfig config, Micros event_delay) {
  config.event_latency = event_delay;
  return config;
}

}  // namespace

Scenario parse_scenario(std::string_view name) {
  if (name == "step") return Scenario::step;
  if (name == "sine_sweep" || name == "sine") return Scenario::sine_sweep;
  if (name == "constant_rate_sweep" || name == "constant_rate") return Scenario::constant_rate_sweep;
  if (name == "coast") return Scenario::coast;
  if (name == "manual") return Scenario::manual;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::step: return "step";
    case Scenario::sine_sweep: return "sine_sweep";
    case Scenario::constant_rate_sweep: return "constant_rate_sweep";
    case Scenario::coast: return "coast";
    case Scenario::manual: return "manual";
  }
  return "?";
}

Excitation parse_excitation(std::string_view name) {
  if (name == "setpoint") return Excitation::setpoint;
  if (name == "disk") return Excitation::disk;
  throw ConfigError("unknown excitation '" + std::string(name) + "'");
}

std::string_view to_string(Excitation e) {
  return e == Excitation::setpoint ? "setpoint" : "disk";
}

FeedbackSource parse_feedback(std::string_view name) {
  if (name == "vision") return FeedbackSource::vision;
  if (name == "encoder") return FeedbackSource::encoder;
  if (name == "truth") return FeedbackSource::truth;
  throw ConfigError("unknown feedback source '" + std::string(name) + "'");
}

std::string_view to_string(FeedbackSource f) {
  switch (f) {
    case FeedbackSource::vision: return "vision";
    case FeedbackSource::encoder: return "encoder";
    case FeedbackSource::truth: return "truth";
  }
  return "?";
}

void DelayConfig::validate() const {
  if (event < 0 || command < 0 || encoder < 0 || compute < 0) throw ConfigError("delays must be >= 0");
}

ControllerGains GainConfig::resolve() const {
  if (synthesize) return gains_from(tau, zeta, inertia);
  if (!std::isfinite(k_p) || !std::isfinite(k_d)) throw ConfigError("gains: k_p and k_d must be finite");
  if (!(inertia > 0.0)) throw ConfigError("gains: model inertia must be > 0");
  ControllerGains g;
  g.k_p = k_p;
  g.k_d = k_d;
  g.inertia = inertia;
  return g;
}

ReferenceKind ExperimentConfig::effective_reference_kind() const {
  if (reference_kind) return *reference_kind;
  switch (scenario) {
    case Scenario::step: return ReferenceKind::step;
    case Scenario::sine_sweep: return ReferenceKind::sine;
    case Scenario::constant_rate_sweep: return ReferenceKind::constant_rate;
    case Scenario::coast: return ReferenceKind::step;
    case Scenario::manual: return ReferenceKind::manual;
  }
  return ReferenceKind::step;
}

bool ExperimentConfig::controlled() const {
  return scenario == Scenario::step || scenario == Scenario::sine_sweep || scenario == Scenario::manual;
}

void ExperimentConfig::validate() const {
  plant.validate();
  camera.validate();
  estimator.validate();
  thrust_map.validate();
  delays.validate();
  (void)gains.resolve();
  const ReferenceKind kind = effective_reference_kind();
  reference.validate(kind);
  if (scenario == Scenario::manual && kind != ReferenceKind::manual) {
    throw ConfigError("manual scenario requires the manual reference kind");
  }
  if (scenario != Scenario::manual && kind == ReferenceKind::manual) {
    throw ConfigError("manual reference kind only applies to the manual scenario");
  }
  if (excitation == Excitation::disk && scenario != Scenario::step && scenario != Scenario::sine_sweep) {
    throw ConfigError("disk excitation only applies to the step and sine_sweep scenarios");
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be > 0");
  if (physics_step <= 0 || tick <= 0 || tick % physics_step != 0) {
    throw ConfigError("tick must be a positive multiple of physics_step");
  }
  if (!(metrics_skip >= 0.0)) throw ConfigError("metrics_skip must be >= 0");
  if (!(manual_steer_hz > 0.0)) throw ConfigError("manual_steer_hz must be > 0");
  if (!(manual_ramp_accel >= 0.0) || !std::isfinite(manual_ramp_accel)) {
    throw ConfigError("manual_ramp_accel must be >= 0");
  }
  if (std::abs(camera.cx - estimator.hough.cx) > 1e-9 || std::abs(camera.cy - estimator.hough.cy) > 1e-9) {
    throw ConfigError("estimator rho origin must match the camera disk centre");
  }
}

double setpoint_at(const ExperimentConfig& config, Micros t) {
  if (config.scenario != Scenario::step && config.scenario != Scenario::sine_sweep) return 0.0;
  if (config.excitation == Excitation::disk) return 0.0;
  return reference_signal(config.effective_reference_kind(), config.reference, t);
}

double scripted_steer_angle(const ExperimentConfig& config, Micros t) {
  const double rate = config.reference.rate;
  const double ts = micros_to_seconds(t - config.reference.onset);
  double travel = 0.0;
  if (ts <= 0.0) {
    travel = 0.0;
  } else if (config.manual_ramp_accel == 0.0) {
    travel = rate * ts;
  } else {
    const double spin_up = std::abs(rate) / config.manual_ramp_accel;
    const double accel = std::copysign(config.manual_ramp_accel, rate);
    travel = ts < spin_up ? 0.5 * accel * ts * ts : 0.5 * rate * spin_up + rate * (ts - spin_up);
  }
  return config.initial_disk + config.reference.offset + travel;
}

double tracking_target_deg(const ExperimentConfig& config, Micros t) {
  return rad2deg(reference_signal(config.effective_reference_kind(), config.reference, t));
}

double tracking_output_deg(const ExperimentConfig& config, const TrajectoryRow& row) {
  return row.alpha_true_deg - rad2deg(config.initial_disk);
}

ClosedLoop::ClosedLoop(const ExperimentConfig& config, ManualChannel* manual, bool keep_logs)
    : cfg_(config),
      manual_(manual),
      scripted_(config.initial_disk),
      keep_logs_(keep_logs),
      gains_(config.gains.resolve()),
      kind_(config.effective_reference_kind()),
      encoder_(Encoder::with_random_bias(config.seed ^ kEncoderSeedSalt)),
      camera_(config.camera, config.seed),
      estimator_(with_latency(config.estimator, config.delays.event)),
      event_line_(config.delays.event),
      command_line_(config.delays.command),
      encoder_line_(config.delays.encoder) {
  cfg_.validate();
  world_ = WorldState::at_rest(cfg_.plant);
  world_.alpha = cfg_.initial_alpha;
  world_.disk_angle = disk_at(0);
  if (cfg_.feedback == FeedbackSource::vision && cfg_.prime_estimator) {
    estimator_.prime(rad2deg(world_.alpha - world_.disk_angle), 0.0, 0);
  }
}

double ClosedLoop::disk_at(Micros t) {
  switch (cfg_.scenario) {
    case Scenario::constant_rate_sweep:
      return cfg_.initial_disk + reference_signal(kind_, cfg_.reference, t);
    case Scenario::manual: {
      if (manual_ != nullptr) return manual_->latest();
      // Scripted steering: a constant-rate ramp sampled at the message rate.
      const auto period = static_cast<Micros>(std::llround(1e6 / cfg_.manual_steer_hz));
      const Micros sent = (t / period) * period;
      scripted_.push(scripted_steer_angle(cfg_, sent));
      return scripted_.latest();
    }
    case Scenario::step:
    case Scenario::sine_sweep:
      if (cfg_.excitation == Excitation::disk) return cfg_.initial_disk + reference_signal(kind_, cfg_.reference, t);
      return cfg_.initial_disk;
    default: return cfg_.initial_disk;
  }
}

void ClosedLoop::advance() {
  sense_and_control();
  integrate();
  t_ += cfg_.tick;
}

void ClosedLoop::sense_and_control() {
  released_.clear();
  if (cfg_.feedback == FeedbackSource::vision) {
    event_line_.pop_into(t_, [this](Event&& e) { released_.push_back(e); });
  }

  double psi = kNaN;
  double psi_dot = kNaN;
  bool valid = false;
  EstimateRow est;
  est.meas_deg = kNaN;
  Micros publish = t_;
  const double tick_s = micros_to_seconds(cfg_.tick);

  switch (cfg_.feedback) {
    case FeedbackSource::vision: {
      const TickResult r = estimator_.tick(released_, u_prev_deg_s_, t_);
      valid = r.initialized;
      psi = r.state.alpha;
      psi_dot = r.state.alpha_dot;
      if (r.measurement) est.meas_deg = r.measurement->z_deg;
      est.peak_count = estimator_.window().max_count();
      est.tick_compute_us = cfg_.record_timing ? r.compute_us : 0.0;
      publish = t_ + cfg_.delays.compute;
      break;
    }
    case FeedbackSource::encoder: {
      const double reading =
          encoder_.read(world_, EncoderChannel::dualcopter) - encoder_.read(world_, EncoderChannel::disk);
      encoder_line_.push(t_, reading);
      const std::optional<double>& held = encoder_line_.hold(t_);
      if (held) {
        psi = *held;
        psi_dot = prev_encoder_deg_ ? (*held - *prev_encoder_deg_) / tick_s : 0.0;
        prev_encoder_deg_ = *held;
        valid = true;
      }
      break;
    }
    case FeedbackSource::truth:
      psi = rad2deg(world_.alpha - world_.disk_angle);
      psi_dot = rad2deg(world_.alpha_dot - disk_rate_);
      valid = true;
      break;
  }

  const double setpoint = setpoint_at(cfg_, t_);
  double torque = 0.0;
  if (cfg_.controlled() && valid) {
    const bool feedforward = cfg_.rate_feedforward && cfg_.excitation == Excitation::setpoint;
    const double rate_des = feedforward ? reference_rate(kind_, cfg_.reference, t_) : 0.0;
    torque = pd_torque(deg2rad(psi), deg2rad(psi_dot), setpoint, rate_des, gains_);
  }
  const ThrustCommand cmd = allocate(torque, cfg_.plant);
  const DutyCommand d1 = thrust_to_duty(cmd.f1, cfg_.thrust_map);
  const DutyCommand d2 = thrust_to_duty(cmd.f2, cfg_.thrust_map);
  u_prev_deg_s_ = rad2deg(cmd.torque(cfg_.plant) / gains_.inertia * tick_s);
  command_line_.push(publish, cmd);

  est.t = publish;
  est.alpha_est_deg = valid ? psi : kNaN;
  est.alpha_dot_est_deg_s = valid ? psi_dot : kNaN;

  if (keep_logs_) {
    logs_.trajectory.push_back({t_, rad2deg(world_.alpha), rad2deg(world_.alpha_dot), rad2deg(world_.disk_angle),
                                world_.f1, world_.f2});
    logs_.estimates.push_back(est);
    logs_.commands.push_back({publish, torque, cmd.f1, cmd.f2, d1.duty, d2.duty,
                              cmd.saturated || d1.saturated || d2.saturated});
  }

  snapshot_.t = t_;
  snapshot_.world = world_;
  snapshot_.setpoint_deg = rad2deg(setpoint);
  snapshot_.alpha_est_deg = est.alpha_est_deg;
  snapshot_.alpha_dot_est_deg_s = est.alpha_dot_est_deg_s;
  snapshot_.estimator_initialized = valid;
  snapshot_.measurement = std::isfinite(est.meas_deg);
  snapshot_.peak_count = est.peak_count;
  snapshot_.duty1 = d1.duty;
  snapshot_.duty2 = d2.duty;
}

void ClosedLoop::integrate() {
  const Micros h = cfg_.physics_step;
  const double h_s = micros_to_seconds(h);
  const bool vision = cfg_.feedback == FeedbackSource::vision;
  for (Micros ts = t_; ts < t_ + cfg_.tick; ts += h) {
    const Micros te = ts + h;
    const std::optional<ThrustCommand>& held = command_line_.hold(ts);
    if (held) {
      world_.f1_cmd = held->f1;
      world_.f2_cmd = held->f2;
    } else {
      world_.f1_cmd = world_.f2_cmd = cfg_.plant.bias_thrust;
    }

    const double rel_before = world_.alpha - world_.disk_angle;
    const double disk_next = disk_at(te);
    if (cfg_.scenario == Scenario::constant_rate_sweep) {
      world_.t = te;  // dualcopter clamped in its fixture
    } else {
      world_ = step_physics(world_, h, cfg_.plant);
    }
    disk_rate_ = (disk_next - world_.disk_angle) / h_s;
    world_.disk_angle = disk_next;
    const double rel_after = world_.alpha - world_.disk_angle;

    if (!vision) continue;
    scratch_.clear();
    const double sweep = rel_after - rel_before;
    const auto pieces = std::clamp<Micros>(static_cast<Micros>(std::ceil(std::abs(sweep) / (kPi / 4.0))), 1, h);
    for (Micros p = 0; p < pieces; ++p) {
      const double a0 = rel_before + sweep * static_cast<double>(p) / static_cast<double>(pieces);
      const double a1 = rel_before + sweep * static_cast<double>(p + 1) / static_cast<double>(pieces);
      camera_.generate_into(a0, a1, ts + h * p / pieces, ts + h * (p + 1) / pieces, scratch_);
    }
    for (const Event& e : scratch_) {
      event_line_.push(e.t, e);
      if (keep_logs_ && cfg_.log_events) logs_.events.push_back(e);
    }
  }
}

RunReport run_experiment(const ExperimentConfig& config) {
  RunReport report;
  report.config = config;
  ClosedLoop loop(config);
  const auto ticks = static_cast<Micros>(std::llround(config.duration * 1e6 / static_cast<double>(config.tick)));
  try {
    for (Micros k = 0; k < ticks; ++k) loop.advance();
  } catch (const FaultError& e) {
    report.ok = false;
    report.fault = e.what();
  }
  report.logs = std::move(loop.logs());
  report.summary = summarize(report.logs, config);
  return report;
}

double relative_truth_at(const std::vector<TrajectoryRow>& trajectory, Micros t) {
  if (trajectory.empty()) return kNaN;
  auto rel = [](const TrajectoryRow& r) { return r.alpha_true_deg - r.disk_angle_deg; };
  auto it = std::lower_bound(trajectory.begin(), trajectory.end(), t,
                             [](const TrajectoryRow& r, Micros v) { return r.t < v; });
  if (it == trajectory.end()) return kNaN;
  if (it->t == t || it == trajectory.begin()) return it->t == t ? rel(*it) : kNaN;
  const TrajectoryRow& b = *it;
  const TrajectoryRow& a = *(it - 1);
  const double w = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
  return rel(a) + w * (rel(b) - rel(a));
}

RunSummary summarize(const RunLogs& logs, const ExperimentConfig& config) {
  RunSummary s;
  s.ticks = logs.trajectory.size();
  const auto skip = static_cast<Micros>(std::llround(config.metrics_skip * 1e6));

  double sq = 0.0;
  std::size_t n_err = 0, n_ticks = 0, n_meas = 0, n_timed = 0;
  double compute = 0.0;
  for (const EstimateRow& e : logs.estimates) {
    compute += e.tick_compute_us;
    ++n_timed;
    if (e.t < skip) continue;
    ++n_ticks;
    if (std::isfinite(e.meas_deg)) ++n_meas;
    if (!std::isfinite(e.alpha_est_deg)) continue;
    const double truth = relative_truth_at(logs.trajectory, e.t);
    if (!std::isfinite(truth)) continue;
    sq += (e.alpha_est_deg - truth) * (e.alpha_est_deg - truth);
    ++n_err;
  }
  s.rmse_deg = n_err > 0 ? std::sqrt(sq / static_cast<double>(n_err)) : kNaN;
  const bool vision = config.feedback == FeedbackSource::vision;
  s.availability_pct = vision && n_ticks > 0 ? 100.0 * static_cast<double>(n_meas) / static_cast<double>(n_ticks) : kNaN;
  s.mean_tick_compute_us = vision && n_timed > 0 ? compute / static_cast<double>(n_timed) : kNaN;

  double lock = 0.0;
  for (const TrajectoryRow& r : logs.trajectory) {
    if (r.t < skip) continue;
    const double rel = r.alpha_true_deg - r.disk_angle_deg;
    lock = std::max(lock, std::abs(rel - rad2deg(setpoint_at(config, r.t))));
  }
  s.max_lock_error_deg = config.controlled() ? lock : kNaN;

  std::size_t sat = 0;
  for (const CommandRow& c : logs.commands) sat += c.saturated ? 1 : 0;
  s.saturated_pct = logs.commands.empty() ? 0.0 : 100.0 * static_cast<double>(sat) / static_cast<double>(logs.commands.size());

  if (config.scenario == Scenario::step && config.effective_reference_kind() == ReferenceKind::step &&
      config.reference.amplitude != 0.0) {
    std::vector<double> t, y;
    for (const TrajectoryRow& r : logs.trajectory) {
      if (r.t < config.reference.onset) continue;
      t.push_back(micros_to_seconds(r.t - config.reference.onset));
      y.push_back(tracking_output_deg(config, r));
    }
    if (t.size() > 1) {
      const double initial = rad2deg(config.initial_alpha - config.initial_disk);
      const double target = tracking_target_deg(config, config.reference.onset);
      const StepMetrics m = step_metrics(t, y, initial, target);
      s.rise_time = m.rise_time;
      s.overshoot_pct = m.overshoot_pct;
      s.settling_time = m.settling_time;
    }
  }
  return s;
}

}  // namespace evtrack
