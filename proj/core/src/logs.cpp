#include "evtrack/logs.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "evtrack/config.hpp"
#include "evtrack/error.hpp"

namespace evtrack {

namespace {

void put(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
    return;
  }
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

void put(std::ostream& out, Micros v) { out << v; }

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string_view header, std::string_view what) : in_(in), what_(what) {
    std::string line;
    if (!std::getline(in_, line)) fail("empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) fail("header '" + line + "' does not match '" + std::string(header) + "'");
  }

  /// Splits the next non-empty line; false at end of input.
  bool next(std::size_t expected) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_no_;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      if (raw.empty()) continue;
      line_ = raw;
      fields_.clear();
      std::size_t start = 0;
      while (true) {
        const auto comma = line_.find(',', start);
        fields_.push_back(std::string_view(line_).substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (fields_.size() != expected) {
        fail("expected " + std::to_string(expected) + " fields, got " + std::to_string(fields_.size()));
      }
      return true;
    }
    return false;
  }

  double real(std::size_t i) {
    const std::string_view f = fields_[i];
    if (f == "nan" || f == "NaN" || f == "-nan") return std::nan("");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || ptr != f.data() + f.size()) fail("bad number '" + std::string(f) + "'");
    return v;
  }

  template <class T>
  T integer(std::size_t i) {
    const std::string_view f = fields_[i];
    T v{};
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || ptr != f.data() + f.size()) fail("bad integer '" + std::string(f) + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(std::string(what_) + " log, line " + std::to_string(line_no_ + 1) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string_view what_;
  std::size_t line_no_ = 0;
  std::string line_;
  std::vector<std::string_view> fields_;
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows) {
  out << kTrajectoryHeader << '\n';
  for (const TrajectoryRow& r : rows) {
    put(out, r.t), out << ',', put(out, r.alpha_true_deg), out << ',', put(out, r.alpha_dot_true_deg_s);
    out << ',', put(out, r.disk_angle_deg), out << ',', put(out, r.f1), out << ',', put(out, r.f2);
    out << '\n';
  }
}

void write_events_csv(std::ostream& out, std::span<const Event> events) {
  out << kEventHeader << '\n';
  for (const Event& e : events) out << e.t << ',' << e.x << ',' << e.y << ',' << int(e.polarity) << '\n';
}

void write_estimates_csv(std::ostream& out, std::span<const EstimateRow> rows) {
  out << kEstimateHeader << '\n';
  for (const EstimateRow& r : rows) {
    put(out, r.t), out << ',', put(out, r.alpha_est_deg), out << ',', put(out, r.alpha_dot_est_deg_s);
    out << ',', put(out, r.meas_deg), out << ',' << r.peak_count << ',', put(out, r.tick_compute_us);
    out << '\n';
  }
}

void write_commands_csv(std::ostream& out, std::span<const CommandRow> rows) {
  out << kCommandHeader << '\n';
  for (const CommandRow& r : rows) {
    put(out, r.t), out << ',', put(out, r.torque), out << ',', put(out, r.f1_cmd), out << ',', put(out, r.f2_cmd);
    out << ',', put(out, r.duty1), out << ',', put(out, r.duty2), out << ',' << (r.saturated ? 1 : 0) << '\n';
  }
}

void write_bode_csv(std::ostream& out, std::span<const BodePoint> points) {
  out << kBodeHeader << '\n';
  for (const BodePoint& p : points) {
    put(out, p.omega), out << ',', put(out, p.gain_db), out << ',', put(out, p.phase_deg), out << '\n';
  }
}

void write_rmse_csv(std::ostream& out, std::span<const RmseSample> samples, const std::vector<bool>& used) {
  out << kRmseHeader << '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    put(out, samples[i].speed_deg_s), out << ',', put(out, samples[i].rmse_deg);
    out << ',' << (i < used.size() && used[i] ? 1 : 0) << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  CsvReader csv(in, kTrajectoryHeader, "trajectory");
  std::vector<TrajectoryRow> rows;
  while (csv.next(6)) {
    rows.push_back({csv.integer<Micros>(0), csv.real(1), csv.real(2), csv.real(3), csv.real(4), csv.real(5)});
  }
  return rows;
}

std::vector<Event> read_events_csv(std::istream& in) {
  CsvReader csv(in, kEventHeader, "event");
  std::vector<Event> events;
  while (csv.next(4)) {
    Event e;
    e.t = csv.integer<Micros>(0);
    e.x = csv.integer<std::uint16_t>(1);
    e.y = csv.integer<std::uint16_t>(2);
    const int p = csv.integer<int>(3);
    if (p != 1 && p != -1) csv.fail("polarity must be +1 or -1");
    e.polarity = static_cast<std::int8_t>(p);
    if (!events.empty() && e.t < events.back().t) csv.fail("timestamps must be non-decreasing");
    events.push_back(e);
  }
  return events;
}

std::vector<EstimateRow> read_estimates_csv(std::istream& in) {
  CsvReader csv(in, kEstimateHeader, "estimate");
  std::vector<EstimateRow> rows;
  while (csv.next(6)) {
    rows.push_back({csv.integer<Micros>(0), csv.real(1), csv.real(2), csv.real(3), csv.integer<int>(4), csv.real(5)});
  }
  return rows;
}

std::vector<CommandRow> read_commands_csv(std::istream& in) {
  CsvReader csv(in, kCommandHeader, "command");
  std::vector<CommandRow> rows;
  while (csv.next(7)) {
    const int sat = csv.integer<int>(6);
    if (sat != 0 && sat != 1) csv.fail("saturated must be 0 or 1");
    rows.push_back({csv.integer<Micros>(0), csv.real(1), csv.real(2), csv.real(3), csv.real(4), csv.real(5), sat == 1});
  }
  return rows;
}

std::vector<BodePoint> read_bode_csv(std::istream& in) {
  CsvReader csv(in, kBodeHeader, "bode");
  std::vector<BodePoint> points;
  while (csv.next(3)) points.push_back({csv.real(0), csv.real(1), csv.real(2)});
  return points;
}

std::vector<Event> read_events_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_events_csv(in);
}

nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json to_json(const RunSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json_number(*v) : nlohmann::json(nullptr); };
  return {
      {"ticks", s.ticks},
      {"rmse_deg", json_number(s.rmse_deg)},
      {"availability_pct", json_number(s.availability_pct)},
      {"mean_tick_compute_us", json_number(s.mean_tick_compute_us)},
      {"max_lock_error_deg", json_number(s.max_lock_error_deg)},
      {"saturated_pct", json_number(s.saturated_pct)},
      {"rise_time_s", opt(s.rise_time)},
      {"overshoot_pct", opt(s.overshoot_pct)},
      {"settling_time_s", opt(s.settling_time)},
  };
}

nlohmann::json to_json(const FitResult& f) {
  return {
      {"K", json_number(f.fit.K)},
      {"a1", json_number(f.fit.a1)},
      {"a2", json_number(f.fit.a2)},
      {"a3", json_number(f.fit.a3)},
      {"delay_ms", json_number(f.fit.delay * 1e3)},
      {"residual", json_number(f.residual)},
      {"converged", f.converged},
      {"evaluations", f.evaluations},
  };
}

nlohmann::json to_json(const DelayEstimate& d) {
  return {
      {"slope_ms", json_number(d.slope_ms)},
      {"stderr_ms", json_number(d.stderr_ms)},
      {"intercept_deg", json_number(d.intercept_deg)},
  };
}

void write_run(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  open_out(dir / RunFiles::config_ini) << to_ini(report.config);
  open_out(dir / RunFiles::config_json) << to_json(report.config).dump(2) << '\n';
  {
    auto out = open_out(dir / RunFiles::trajectory);
    write_trajectory_csv(out, report.logs.trajectory);
  }
  {
    auto out = open_out(dir / RunFiles::estimates);
    write_estimates_csv(out, report.logs.estimates);
  }
  {
    auto out = open_out(dir / RunFiles::commands);
    write_commands_csv(out, report.logs.commands);
  }
  if (report.config.log_events) {
    auto out = open_out(dir / RunFiles::events);
    write_events_csv(out, report.logs.events);
  }
  nlohmann::json summary = to_json(report.summary);
  summary["ok"] = report.ok;
  if (!report.ok) summary["fault"] = report.fault;
  open_out(dir / RunFiles::summary) << summary.dump(2) << '\n';
}

StoredRun read_run(const std::filesystem::path& dir) {
  StoredRun run;
  try {
    run.config = config_from_json(nlohmann::json::parse(open_in(dir / RunFiles::config_json)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config.json: " + std::string(e.what()));
  }
  {
    auto in = open_in(dir / RunFiles::trajectory);
    run.logs.trajectory = read_trajectory_csv(in);
  }
  {
    auto in = open_in(dir / RunFiles::estimates);
    run.logs.estimates = read_estimates_csv(in);
  }
  {
    auto in = open_in(dir / RunFiles::commands);
    run.logs.commands = read_commands_csv(in);
  }
  if (std::filesystem::exists(dir / RunFiles::events)) run.logs.events = read_events_file(dir / RunFiles::events);
  if (std::filesystem::exists(dir / RunFiles::summary)) {
    try {
      run.summary = nlohmann::json::parse(open_in(dir / RunFiles::summary));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("summary.json: " + std::string(e.what()));
    }
  }
  return run;
}

}  // namespace evtrack
