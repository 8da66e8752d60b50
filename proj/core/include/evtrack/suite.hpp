#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evtrack/experiment.hpp"
#include "evtrack/sysid.hpp"

namespace evtrack {

/// n log-spaced frequencies from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, int n);

/// Largest torque the allocation can produce without clamping a rotor.
double torque_authority(const PlantParams& plant);

/// Which signal a Bode sweep treats as the loop output.
///  - feedback: the relative roll the controller acted on, stamped when it
///    reached the controller, so sensing latency shows up as dead time.
///  - truth: the simulated roll itself.
enum class BodeOutput { feedback, truth };

struct BodeOptions {
  std::vector<double> omegas = log_space(0.5, 50.0, 12);
  /// Input amplitude is peak_rate / omega, so the relative motion seen by
  /// the camera is comparable across the sweep...
  double peak_rate_deg_s = 800.0;
  /// ...capped so the nominal second-order loop error needs at most this
  /// fraction of the torque authority.
  double authority_margin = 0.8;
  double transient_taus = 3.0;  ///< discarded start, in closed-loop time constants
  int periods = 5;              ///< whole periods kept for the fit
  double min_duration = 2.0;    ///< [s] of kept data at high frequencies
  BodeOutput output = BodeOutput::feedback;
  FitOptions fit;
  unsigned threads = 0;  ///< 0 = hardware concurrency
};

/// Sine amplitude [rad] used at omega under `options` for this config.
double bode_amplitude(const ExperimentConfig& config, double omega, const BodeOptions& options);
/// Closed-loop time constant behind the transient cut: the design tau, or
/// sqrt(J / k_p) for explicit gains.
double loop_time_constant(const ExperimentConfig& config);

struct BodeRun {
  double omega = 0.0;
  double amplitude_deg = 0.0;
  RunSummary summary;
  bool ok = true;
  std::string fault;
};

struct BodeSweep {
  std::vector<BodePoint> points;
  std::vector<BodeRun> runs;
  std::optional<FitResult> fit;
  std::string fit_error;  ///< why there is no fit
};

/// Sine-sweep runs of `base` (scenario forced to sine_sweep, setpoint
/// excitation) at every frequency, response extraction and the transfer fit.
BodeSweep run_bode_sweep(const ExperimentConfig& base, const BodeOptions& options = {});

struct RmseOptions {
  std::vector<double> speeds_deg_s = {100, 200, 360, 400, 600, 800, 1000, 1200, 1600};
  double baseline_deg = 2.0;
  double duration = 2.0;
  unsigned threads = 0;
};

struct RmseSweep {
  Micros event_delay = 0;
  double expected_delay_ms = 0.0;  ///< event delay plus compute delay
  std::vector<RmseSample> samples;
  std::vector<RunSummary> summaries;
  std::optional<DelayEstimate> delay;
  std::string delay_error;
};

/// Constant-rate sweeps of `base` with the given event delay.
RmseSweep run_rmse_sweep(const ExperimentConfig& base, Micros event_delay, const RmseOptions& options = {});

/// One line of a suite's pass/fail table. Informational lines report a
/// number without judging it.
struct SuiteCheck {
  std::string name;
  bool passed = true;
  bool informational = false;
  std::string detail;
};

struct SuiteResult {
  std::string name;
  nlohmann::json report;
  std::vector<SuiteCheck> checks;
  bool runs_ok = true;  ///< false when any run faulted

  bool passed() const;
};

struct SuiteOptions {
  ExperimentConfig base;
  std::optional<std::filesystem::path> out_dir;
  unsigned threads = 0;
  std::vector<Micros> rmse_event_delays = {0, 5000, 12000};
  double bode_delay_tolerance_ms = 1.5;
  double rmse_delay_tolerance_ms = 1.0;
};

/// Names accepted by run_suite: rmse_sweep, bode_vision, bode_encoder,
/// bode_compare, step_compare, inertia_id.
std::vector<std::string> suite_names();

/// Runs a named suite, writes its data files under out_dir when given, and
/// fills the pass/fail table. Unknown names raise ConfigError.
SuiteResult run_suite(std::string_view name, const SuiteOptions& options);

}  // namespace evtrack
