#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "evtrack/experiment.hpp"
#include "evtrack/sysid.hpp"

namespace evtrack {

// CSV log formats. Doubles are written in shortest round-trip form so a log
// read back reproduces the in-memory values bit for bit; NaN is written as
// "nan". Readers check the header line and raise ConfigError on malformed
// input.

inline constexpr const char* kTrajectoryHeader = "t_us,alpha_true_deg,alpha_dot_true_deg_s,disk_angle_deg,f1_N,f2_N";
inline constexpr const char* kEventHeader = "t_us,x,y,polarity";
inline constexpr const char* kEstimateHeader =
    "t_us,alpha_est_deg,alpha_dot_est_deg_s,meas_deg_or_nan,peak_count,tick_compute_us";
inline constexpr const char* kCommandHeader = "t_us,torque_Nm,f1_cmd_N,f2_cmd_N,duty1,duty2,saturated";
inline constexpr const char* kBodeHeader = "omega_rad_s,gain_db,phase_deg";
inline constexpr const char* kRmseHeader = "speed_deg_s,rmse_deg,used_in_fit";

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows);
void write_events_csv(std::ostream& out, std::span<const Event> events);
void write_estimates_csv(std::ostream& out, std::span<const EstimateRow> rows);
void write_commands_csv(std::ostream& out, std::span<const CommandRow> rows);
void write_bode_csv(std::ostream& out, std::span<const BodePoint> points);
/// `used` may be empty (all written as 0).
void write_rmse_csv(std::ostream& out, std::span<const RmseSample> samples, const std::vector<bool>& used);

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);
/// Rejects decreasing timestamps and polarities other than +-1.
std::vector<Event> read_events_csv(std::istream& in);
std::vector<EstimateRow> read_estimates_csv(std::istream& in);
std::vector<CommandRow> read_commands_csv(std::istream& in);
std::vector<BodePoint> read_bode_csv(std::istream& in);

std::vector<Event> read_events_file(const std::filesystem::path& path);

/// Numbers with NaN and infinities mapped to null.
nlohmann::json json_number(double v);
nlohmann::json to_json(const RunSummary& summary);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const DelayEstimate& estimate);

/// File names inside a run directory.
struct RunFiles {
  static constexpr const char* config_ini = "config.ini";
  static constexpr const char* config_json = "config.json";
  static constexpr const char* trajectory = "trajectory.csv";
  static constexpr const char* estimates = "estimates.csv";
  static constexpr const char* commands = "commands.csv";
  static constexpr const char* events = "events.csv";
  static constexpr const char* summary = "summary.json";
};

/// Writes the config echo, the four logs (events only when present) and
/// summary.json. Creates the directory.
void write_run(const RunReport& report, const std::filesystem::path& dir);

/// Reads a run directory back: exact config from config.json plus logs.
struct StoredRun {
  ExperimentConfig config;
  RunLogs logs;
  nlohmann::json summary;  ///< as written by the run
};
StoredRun read_run(const std::filesystem::path& dir);

}  // namespace evtrack
