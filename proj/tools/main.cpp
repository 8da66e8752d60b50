#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "evtrack/config.hpp"
#include "evtrack/error.hpp"
#include "evtrack/estimator.hpp"
#include "evtrack/live_server.hpp"
#include "evtrack/logs.hpp"
#include "evtrack/suite.hpp"

namespace {

using namespace evtrack;

enum Exit { kPass = 0, kFault = 1, kConfig = 2, kAcceptance = 3 };

/// Flags shared by every command that builds an ExperimentConfig.
struct ConfigFlags {
  std::string file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  std::optional<std::string> feedback;
  std::optional<double> duration;
  std::optional<Micros> event_delay;
  std::optional<Micros> compute_delay;

  void add_to(CLI::App& app, bool seed_required) {
    app.add_option("-c,--config", file, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override, section.key=value (repeatable)");
    auto* s = app.add_option("--seed", seed, "random seed");
    if (seed_required) s->required();
    app.add_option("--scenario", scenario, "experiment.scenario");
    app.add_option("--feedback", feedback, "experiment.feedback");
    app.add_option("--duration", duration, "experiment.duration [s]");
    app.add_option("--event-delay", event_delay, "delays.event [us]");
    app.add_option("--compute-delay", compute_delay, "delays.compute [us]");
  }

  ExperimentConfig build(ExperimentConfig base = {}) const {
    ExperimentConfig c = file.empty() ? base : load_config_file(file, base);
    if (scenario) apply_setting(c, "experiment.scenario", *scenario);
    if (feedback) apply_setting(c, "experiment.feedback", *feedback);
    if (duration) c.duration = *duration;
    if (event_delay) c.delays.event = *event_delay;
    if (compute_delay) c.delays.compute = *compute_delay;
    if (seed) c.seed = *seed;
    for (const std::string& s : sets) apply_override(c, s);
    c.validate();
    return c;
  }
};

void print_summary_line(const RunSummary& s) {
  std::printf("ticks %zu  rmse %.3f deg  availability %.1f %%  mean tick %.1f us  max lock error %.2f deg\n",
              s.ticks, s.rmse_deg, s.availability_pct, s.mean_tick_compute_us, s.max_lock_error_deg);
  if (s.overshoot_pct) {
    std::printf("rise %.3f s  overshoot %.2f %%  settling %.3f s\n", s.rise_time.value_or(NAN), *s.overshoot_pct,
                s.settling_time.value_or(NAN));
  }
}

int cmd_run(const ConfigFlags& flags, const std::string& out, bool json, bool print_config) {
  const ExperimentConfig config = flags.build();
  if (print_config) {
    std::cout << to_ini(config);
    return kPass;
  }
  const RunReport report = run_experiment(config);
  if (!out.empty()) write_run(report, out);
  if (json) {
    nlohmann::json j = to_json(report.summary);
    j["ok"] = report.ok;
    if (!report.ok) j["fault"] = report.fault;
    std::cout << j.dump(2) << '\n';
  } else {
    print_summary_line(report.summary);
  }
  if (!report.ok) {
    std::fprintf(stderr, "run fault: %s\n", report.fault.c_str());
    return kFault;
  }
  return kPass;
}

int cmd_suite(const ConfigFlags& flags, const std::vector<std::string>& names, const std::string& out,
              unsigned threads) {
  SuiteOptions options;
  options.base = flags.build();
  options.threads = threads;
  if (!out.empty()) options.out_dir = out;

  std::vector<std::string> selected = names;
  if (selected.size() == 1 && selected[0] == "all") {
    selected = {"rmse_sweep", "bode_compare", "step_compare", "inertia_id"};
  }
  bool faulted = false, failed = false;
  for (const std::string& name : selected) {
    const SuiteResult r = run_suite(name, options);
    std::printf("== %s\n", r.name.c_str());
    for (const SuiteCheck& c : r.checks) {
      const char* tag = c.informational ? "INFO" : (c.passed ? "PASS" : "FAIL");
      std::printf("  [%s] %s: %s\n", tag, c.name.c_str(), c.detail.c_str());
    }
    if (!r.runs_ok) {
      std::printf("  [FAULT] at least one run faulted\n");
      faulted = true;
    }
    failed = failed || !r.passed();
  }
  if (faulted) return kFault;
  return failed ? kAcceptance : kPass;
}

int cmd_replay(const ConfigFlags& flags, const std::string& events_path, const std::string& out, double u) {
  const ExperimentConfig config = flags.build();
  const std::vector<Event> events = read_events_file(events_path);
  HorizonEstimator estimator(config.estimator);
  std::vector<EstimateRow> rows;
  const Micros tick = config.tick;
  const Micros end = events.empty() ? 0 : events.back().t;
  std::size_t next = 0;
  std::size_t measured = 0;
  double compute = 0.0;
  for (Micros now = 0; now <= end + tick; now += tick) {
    const std::size_t first = next;
    while (next < events.size() && events[next].t <= now) ++next;
    const TickResult r = estimator.tick(std::span<const Event>(events).subspan(first, next - first), u, now);
    EstimateRow row;
    row.t = now;
    row.alpha_est_deg = r.initialized ? r.state.alpha : NAN;
    row.alpha_dot_est_deg_s = r.initialized ? r.state.alpha_dot : NAN;
    row.meas_deg = r.measurement ? r.measurement->z_deg : NAN;
    row.peak_count = estimator.window().max_count();
    row.tick_compute_us = r.compute_us;
    compute += r.compute_us;
    measured += r.measurement ? 1 : 0;
    rows.push_back(row);
  }
  if (out.empty() || out == "-") {
    write_estimates_csv(std::cout, rows);
  } else {
    std::ofstream f(out);
    if (!f) throw ConfigError("cannot write " + out);
    write_estimates_csv(f, rows);
  }
  std::fprintf(stderr, "replayed %zu events over %zu ticks: %zu measurements (%.1f %%), mean tick %.1f us\n",
               events.size(), rows.size(), measured, rows.empty() ? 0.0 : 100.0 * measured / rows.size(),
               rows.empty() ? 0.0 : compute / rows.size());
  return kPass;
}

bool same_number(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
  if (a.is_boolean() || b.is_boolean()) return a == b;
  return a.get<double>() == b.get<double>();
}

int cmd_report(const std::string& run_dir, const std::string& bode, const std::string& rmse, double baseline) {
  int code = kPass;
  if (!run_dir.empty()) {
    const StoredRun run = read_run(run_dir);
    const nlohmann::json recomputed = to_json(summarize(run.logs, run.config));
    std::printf("run %s\n", run_dir.c_str());
    bool mismatch = false;
    for (const auto& [key, value] : recomputed.items()) {
      const nlohmann::json stored = run.summary.contains(key) ? run.summary[key] : nlohmann::json();
      const bool same = same_number(value, stored);
      mismatch = mismatch || !same;
      std::printf("  %-22s %-24s %s\n", key.c_str(), value.dump().c_str(), same ? "" : ("stored " + stored.dump()).c_str());
    }
    if (mismatch) {
      std::printf("  summary does not match the logs\n");
      code = kAcceptance;
    }
  }
  if (!bode.empty()) {
    std::ifstream in(bode);
    if (!in) throw ConfigError("cannot read " + bode);
    const std::vector<BodePoint> points = read_bode_csv(in);
    const FitResult fit = fit_transfer(points);
    nlohmann::json j = to_json(fit);
    try {
      j["omega_n_rad_s"] = natural_frequency(fit.fit);
    } catch (const AnalysisError&) {
      j["omega_n_rad_s"] = nullptr;
    }
    std::cout << j.dump(2) << '\n';
  }
  if (!rmse.empty()) {
    std::ifstream in(rmse);
    if (!in) throw ConfigError("cannot read " + rmse);
    std::string header;
    std::getline(in, header);
    if (header != kRmseHeader) throw ConfigError(rmse + ": unexpected header");
    std::vector<RmseSample> samples;
    double speed = 0, value = 0;
    int used = 0;
    char c1 = 0, c2 = 0;
    while (in >> speed >> c1 >> value >> c2 >> used) samples.push_back({speed, value});
    const DelayEstimate d = delay_from_rmse(samples, baseline);
    std::cout << to_json(d).dump(2) << '\n';
  }
  return code;
}

std::atomic<bool> g_interrupted{false};

int cmd_serve(const ConfigFlags& flags, LiveOptions options) {
  ExperimentConfig base;
  base.scenario = Scenario::manual;
  base.record_timing = false;
  const ExperimentConfig config = flags.build(base);
  LiveServer server(config, options);
  const std::uint16_t port = server.start();
  std::printf("serving ws://%s:%u\n", options.address.c_str(), port);
  std::fflush(stdout);
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  while (server.running() && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  const LiveStats st = server.stats();
  std::printf("ticks %llu  frames %llu (dropped %llu)  steer %llu  malformed %llu\n",
              static_cast<unsigned long long>(st.ticks), static_cast<unsigned long long>(st.frames_published),
              static_cast<unsigned long long>(st.frames_dropped), static_cast<unsigned long long>(st.steer_accepted),
              static_cast<unsigned long long>(st.malformed));
  if (!st.fault.empty()) {
    std::fprintf(stderr, "loop fault: %s\n", st.fault.c_str());
    return kFault;
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evtrack: event-camera attitude tracking laboratory"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  std::string run_out;
  bool run_json = false;
  bool print_config = false;
  auto* run = app.add_subcommand("run", "run one closed-loop experiment");
  run_flags.add_to(*run, true);
  run->add_option("-o,--out", run_out, "directory for logs and summary");
  run->add_flag("--json", run_json, "print the summary as JSON");
  run->add_flag("--print-config", print_config, "print the resolved config as INI and exit");

  ConfigFlags suite_flags;
  std::vector<std::string> suite_list;
  std::string suite_out;
  unsigned threads = 0;
  auto* suite = app.add_subcommand("suite", "run an experiment suite and its pass/fail table");
  suite_flags.add_to(*suite, true);
  std::vector<std::string> allowed = suite_names();
  allowed.push_back("all");
  suite->add_option("names", suite_list, "suite names or 'all'")->required()->check(CLI::IsMember(allowed));
  suite->add_option("-o,--out", suite_out, "directory for data files");
  suite->add_option("-j,--threads", threads, "worker threads (0 = all cores)");

  ConfigFlags serve_flags;
  LiveOptions live;
  auto* serve = app.add_subcommand("serve", "real-time manual session behind a websocket");
  serve_flags.add_to(*serve, false);
  serve->add_option("--address", live.address, "listen address");
  serve->add_option("-p,--port", live.port, "listen port (0 = any)");
  serve->add_option("--telemetry-hz", live.telemetry_hz, "telemetry frame rate");
  serve->add_option("--max-points", live.max_points, "event points per frame");
  serve->add_option("--time-scale", live.time_scale, "simulated seconds per wall second");
  serve->add_option("--stop-after", live.duration, "stop after this much simulated time [s]");

  ConfigFlags replay_flags;
  std::string events_path, replay_out;
  double replay_u = 0.0;
  auto* replay = app.add_subcommand("replay", "feed an event log through the estimator");
  replay_flags.add_to(*replay, false);
  replay->add_option("events", events_path, "event CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("-o,--out", replay_out, "estimate CSV (default stdout)");
  replay->add_option("--input", replay_u, "filter input per tick [deg/s]");

  std::string report_run, report_bode, report_rmse;
  double baseline = 2.0;
  auto* report = app.add_subcommand("report", "recompute summaries and fits from written files");
  report->add_option("--run", report_run, "run directory")->check(CLI::ExistingDirectory);
  report->add_option("--bode", report_bode, "Bode CSV to fit")->check(CLI::ExistingFile);
  report->add_option("--rmse", report_rmse, "RMSE CSV to regress")->check(CLI::ExistingFile);
  report->add_option("--baseline", baseline, "RMSE baseline for the delay fit [deg]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfig;
  }

  try {
    if (*run) return cmd_run(run_flags, run_out, run_json, print_config);
    if (*suite) return cmd_suite(suite_flags, suite_list, suite_out, threads);
    if (*serve) return cmd_serve(serve_flags, live);
    if (*replay) return cmd_replay(replay_flags, events_path, replay_out, replay_u);
    if (*report) {
      if (report_run.empty() && report_bode.empty() && report_rmse.empty()) {
        std::fprintf(stderr, "report: give --run, --bode or --rmse\n");
        return kConfig;
      }
      return cmd_report(report_run, report_bode, report_rmse, baseline);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const AnalysisError& e) {
    std::fprintf(stderr, "analysis error: %s\n", e.what());
    return kConfig;
  } catch (const FaultError& e) {
    std::fprintf(stderr, "fault: %s\n", e.what());
    return kFault;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFault;
  }
  return kPass;
}
