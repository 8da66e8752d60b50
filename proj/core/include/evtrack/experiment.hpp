#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evtrack/camera.hpp"
#include "evtrack/controller.hpp"
#include "evtrack/delay_line.hpp"
#include "evtrack/dynamics.hpp"
#include "evtrack/estimator.hpp"
#include "evtrack/reference.hpp"
#include "evtrack/sysid.hpp"

namespace evtrack {

/// What drives the run.
///  - step, sine_sweep: the commanded relative roll follows the reference,
///    the disk stays put.
///  - constant_rate_sweep: the disk turns along the reference while the
///    dualcopter is held on its fixture and the controller is off.
///  - coast: motors sit at the bias thrust, no control, disk static.
///  - manual: the disk follows the steering channel; the loop keeps the
///    relative roll at zero.
enum class Scenario { step, sine_sweep, constant_rate_sweep, coast, manual };

/// What the step and sine references move in the step and sine_sweep
/// scenarios: the commanded relative roll, or the disk itself (the loop then
/// holds the relative roll at zero and the sensing path carries the input).
enum class Excitation { setpoint, disk };

/// Where the PD law gets its relative-roll state from.
enum class FeedbackSource { vision, encoder, truth };

Scenario parse_scenario(std::string_view name);
std::string_view to_string(Scenario s);
Excitation parse_excitation(std::string_view name);
std::string_view to_string(Excitation e);
FeedbackSource parse_feedback(std::string_view name);
std::string_view to_string(FeedbackSource f);

/// Transport latencies [us].
struct DelayConfig {
  Micros event = 5000;    ///< sensor to estimator
  Micros command = 500;   ///< controller to rotors
  Micros encoder = 1000;  ///< encoder to controller
  Micros compute = 0;     ///< estimator + controller time before a command leaves (vision only)

  void validate() const;
};

struct GainConfig {
  bool synthesize = true;  ///< derive k_p, k_d from (tau, zeta, inertia)
  double tau = 0.149;
  double zeta = 0.7;
  double inertia = 0.00788;  ///< also the model inertia behind the filter input
  double k_p = 0.353;
  double k_d = 0.071;

  ControllerGains resolve() const;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::step;
  std::optional<ReferenceKind> reference_kind;  ///< defaults by scenario
  ReferenceParams reference;
  PlantParams plant;
  CameraModel camera;
  EstimatorConfig estimator;
  ThrustMap thrust_map;
  DelayConfig delays;
  GainConfig gains;
  FeedbackSource feedback = FeedbackSource::vision;
  Excitation excitation = Excitation::setpoint;

  double duration = 2.0;  ///< [s]
  std::uint64_t seed = 1;
  bool rate_feedforward = false;  ///< feed the reference rate as alpha_dot_des
  bool prime_estimator = true;    ///< start the filter at the known initial alignment
  bool record_timing = true;      ///< log wall-clock tick time (breaks byte-identical logs)
  bool log_events = true;
  Micros physics_step = 100;
  Micros tick = 1000;
  double metrics_skip = 0.2;      ///< summary metrics ignore the first seconds
  double manual_steer_hz = 120.0; ///< steering message rate for scripted manual runs
  double manual_ramp_accel = 0.0; ///< scripted spin-up acceleration [rad/s^2], 0 = instant
  double initial_alpha = 0.0;     ///< [rad]
  double initial_disk = 0.0;      ///< [rad]

  ReferenceKind effective_reference_kind() const;
  bool controlled() const;
  void validate() const;
};

struct TrajectoryRow {
  Micros t = 0;
  double alpha_true_deg = 0.0;
  double alpha_dot_true_deg_s = 0.0;
  double disk_angle_deg = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
};

/// State the controller acted on. t is the instant the value became
/// available (tick time plus compute delay). Angles are relative roll;
/// alpha_est is NaN while the estimator is uninitialized.
struct EstimateRow {
  Micros t = 0;
  double alpha_est_deg = 0.0;
  double alpha_dot_est_deg_s = 0.0;
  double meas_deg = 0.0;  ///< NaN when no line was accepted this tick
  int peak_count = 0;
  double tick_compute_us = 0.0;
};

struct CommandRow {
  Micros t = 0;
  double torque = 0.0;
  double f1_cmd = 0.0;
  double f2_cmd = 0.0;
  double duty1 = 0.0;
  double duty2 = 0.0;
  bool saturated = false;
};

struct RunLogs {
  std::vector<TrajectoryRow> trajectory;
  std::vector<EstimateRow> estimates;
  std::vector<CommandRow> commands;
  std::vector<Event> events;
};

/// Summary metrics, all recomputable from the logs plus the config.
struct RunSummary {
  std::size_t ticks = 0;
  double rmse_deg = 0.0;           ///< feedback state vs true relative roll
  double availability_pct = 0.0;   ///< ticks with an accepted line (vision)
  double mean_tick_compute_us = 0.0;
  double max_lock_error_deg = 0.0; ///< max |relative roll - setpoint|, NaN without control
  double saturated_pct = 0.0;
  std::optional<double> rise_time;
  std::optional<double> overshoot_pct;
  std::optional<double> settling_time;
};

struct RunReport {
  ExperimentConfig config;
  RunLogs logs;
  RunSummary summary;
  bool ok = true;
  std::string fault;
};

/// Snapshot of the last tick for live telemetry.
struct TickSnapshot {
  Micros t = 0;
  WorldState world;
  double setpoint_deg = 0.0;
  double alpha_est_deg = 0.0;
  double alpha_dot_est_deg_s = 0.0;
  bool estimator_initialized = false;
  bool measurement = false;
  int peak_count = 0;
  double duty1 = 0.0;
  double duty2 = 0.0;
};

/// The 1 kHz loop: release delayed events, estimate, control, queue the
/// command, then integrate the physics sub-steps.
class ClosedLoop {
 public:
  /// `manual` feeds the disk in the manual scenario; when null a scripted
  /// constant-rate steering stream is generated from the reference.
  explicit ClosedLoop(const ExperimentConfig& config, ManualChannel* manual = nullptr, bool keep_logs = true);

  /// Runs one control tick and its physics sub-steps.
  void advance();

  Micros now() const { return t_; }
  const WorldState& world() const { return world_; }
  const RunLogs& logs() const { return logs_; }
  RunLogs& logs() { return logs_; }
  const TickSnapshot& snapshot() const { return snapshot_; }
  /// Events handed to the estimator on the last tick.
  const std::vector<Event>& released_events() const { return released_; }
  const ControllerGains& gains() const { return gains_; }
  const Encoder& encoder() const { return encoder_; }

 private:
  double disk_at(Micros t);
  void sense_and_control();
  void integrate();

  ExperimentConfig cfg_;
  ManualChannel* manual_;
  ManualChannel scripted_;
  bool keep_logs_;
  ControllerGains gains_;
  ReferenceKind kind_;
  Encoder encoder_;
  EventCamera camera_;
  HorizonEstimator estimator_;
  DelayLine<Event> event_line_;
  DelayLine<ThrustCommand> command_line_;
  DelayLine<double> encoder_line_;

  WorldState world_;
  Micros t_ = 0;
  double disk_rate_ = 0.0;
  double u_prev_deg_s_ = 0.0;
  std::optional<double> prev_encoder_deg_;
  std::vector<Event> released_;
  std::vector<Event> scratch_;
  RunLogs logs_;
  TickSnapshot snapshot_;
};

/// Runs the whole experiment on the simulated clock. Faults are caught and
/// reported through ok/fault with the logs gathered so far.
RunReport run_experiment(const ExperimentConfig& config);

RunSummary summarize(const RunLogs& logs, const ExperimentConfig& config);

/// Commanded relative roll [rad] at time t (zero for disk-driven scenarios).
double setpoint_at(const ExperimentConfig& config, Micros t);

/// Step and sine runs: where the dualcopter should be, in degrees from the
/// initial disk angle, whichever way the reference is applied.
double tracking_target_deg(const ExperimentConfig& config, Micros t);

/// Step and sine runs: the roll response in the frame of tracking_target_deg.
double tracking_output_deg(const ExperimentConfig& config, const TrajectoryRow& row);

/// Disk angle [rad] of the scripted manual ramp before message sampling:
/// spins up at manual_ramp_accel to reference.rate, then turns at that rate.
double scripted_steer_angle(const ExperimentConfig& config, Micros t);

/// True relative roll at time t, linearly interpolated on the trajectory.
double relative_truth_at(const std::vector<TrajectoryRow>& trajectory, Micros t);

}  // namespace evtrack
