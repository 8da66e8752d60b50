#include "evtrack/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <fstream>
#include <thread>

#include "evtrack/error.hpp"
#include "evtrack/logs.hpp"

namespace evtrack {

namespace {

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, n) on a small pool; the first exception is
/// rethrown after every worker has finished.
template <class Job>
void parallel_for(std::size_t n, unsigned threads, Job&& job) {
  const unsigned workers = worker_count(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            job(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string fmt(double v, int digits = 3) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json bode_json(const BodeSweep& sweep) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
    const BodeRun& r = sweep.runs[i];
    nlohmann::json p = {{"omega_rad_s", r.omega},
                        {"amplitude_deg", r.amplitude_deg},
                        {"availability_pct", json_number(r.summary.availability_pct)},
                        {"saturated_pct", json_number(r.summary.saturated_pct)},
                        {"ok", r.ok}};
    if (!r.ok) p["fault"] = r.fault;
    points.push_back(p);
  }
  nlohmann::json j = {{"runs", points}};
  if (sweep.fit) j["fit"] = to_json(*sweep.fit);
  else j["fit_error"] = sweep.fit_error;
  return j;
}

ExperimentConfig with_feedback(ExperimentConfig c, FeedbackSource f) {
  c.feedback = f;
  return c;
}

SuiteResult bode_single(const SuiteOptions& o, FeedbackSource feedback, std::string name) {
  SuiteResult r;
  r.name = name;
  BodeOptions bo;
  bo.threads = o.threads;
  const BodeSweep sweep = run_bode_sweep(with_feedback(o.base, feedback), bo);
  for (const BodeRun& run : sweep.runs) r.runs_ok = r.runs_ok && run.ok;
  r.report = bode_json(sweep);
  if (o.out_dir) {
    auto out = open_out(*o.out_dir / (name + ".csv"));
    write_bode_csv(out, sweep.points);
    open_out(*o.out_dir / (name + "_fit.json")) << r.report.dump(2) << '\n';
  }
  r.checks.push_back({name + ": transfer fit converged", sweep.fit && sweep.fit->converged, false,
                      sweep.fit ? "T_d = " + fmt(sweep.fit->fit.delay * 1e3, 2) + " ms, residual " +
                                      fmt(sweep.fit->residual, 2)
                                : sweep.fit_error});
  return r;
}

}  // namespace

std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 0) return out;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) {
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1)));
  }
  out.back() = hi;
  return out;
}

double torque_authority(const PlantParams& plant) {
  return 2.0 * plant.arm * std::min(plant.bias_thrust, plant.max_thrust - plant.bias_thrust);
}

double loop_time_constant(const ExperimentConfig& config) {
  const ControllerGains g = config.gains.resolve();
  if (g.tau > 0.0) return g.tau;
  return std::sqrt(g.inertia / g.k_p);
}

double bode_amplitude(const ExperimentConfig& config, double omega, const BodeOptions& options) {
  const ControllerGains g = config.gains.resolve();
  const double wn = std::sqrt(g.k_p / g.inertia);
  const double zeta = g.k_d / (2.0 * std::sqrt(g.k_p * g.inertia));
  const std::complex<double> s(0.0, omega);
  const std::complex<double> h = wn * wn / (s * s + 2.0 * zeta * wn * s + wn * wn);
  const double error_gain = std::max(std::abs(1.0 - h), 1e-9);
  const double by_rate = deg2rad(options.peak_rate_deg_s) / omega;
  const double by_torque = options.authority_margin * torque_authority(config.plant) / (g.k_p * error_gain);
  return std::min(by_rate, by_torque);
}

BodeSweep run_bode_sweep(const ExperimentConfig& base, const BodeOptions& options) {
  const std::size_t n = options.omegas.size();
  const double transient = options.transient_taus * loop_time_constant(base);
  std::vector<RunReport> reports(n);
  std::vector<ExperimentConfig> configs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double omega = options.omegas[i];
    if (!(omega > 0.0)) throw ConfigError("bode: frequencies must be > 0");
    ExperimentConfig c = base;
    c.scenario = Scenario::sine_sweep;
    c.reference_kind = ReferenceKind::sine;
    c.excitation = Excitation::setpoint;
    c.reference.omega = omega;
    c.reference.amplitude = bode_amplitude(base, omega, options);
    c.reference.offset = 0.0;
    c.reference.onset = 0;
    c.log_events = false;
    c.record_timing = false;
    const double kept = std::max(options.periods * 2.0 * kPi / omega, options.min_duration);
    c.duration = transient + kept * 1.05 + 0.01;
    c.validate();
    configs[i] = c;
  }
  parallel_for(n, options.threads, [&](std::size_t i) { reports[i] = run_experiment(configs[i]); });

  BodeSweep sweep;
  std::optional<double> previous;
  for (std::size_t i = 0; i < n; ++i) {
    const RunReport& rep = reports[i];
    const ExperimentConfig& c = configs[i];
    BodeRun run{c.reference.omega, rad2deg(c.reference.amplitude), rep.summary, rep.ok, rep.fault};
    if (rep.ok) {
      std::vector<double> t, y;
      if (options.output == BodeOutput::feedback) {
        for (const EstimateRow& e : rep.logs.estimates) {
          if (!std::isfinite(e.alpha_est_deg)) continue;
          t.push_back(micros_to_seconds(e.t));
          y.push_back(e.alpha_est_deg);
        }
      } else {
        for (const TrajectoryRow& row : rep.logs.trajectory) {
          t.push_back(micros_to_seconds(row.t));
          y.push_back(tracking_output_deg(c, row));
        }
      }
      try {
        const BodePoint p = extract_response(t, y, c.reference.omega, rad2deg(c.reference.amplitude), transient,
                                             previous, options.periods);
        previous = p.phase_deg;
        sweep.points.push_back(p);
      } catch (const AnalysisError& e) {
        run.ok = false;
        run.fault = e.what();
      }
    }
    sweep.runs.push_back(run);
  }
  try {
    sweep.fit = fit_transfer(sweep.points, std::nullopt, options.fit);
  } catch (const AnalysisError& e) {
    sweep.fit_error = e.what();
  }
  return sweep;
}

RmseSweep run_rmse_sweep(const ExperimentConfig& base, Micros event_delay, const RmseOptions& options) {
  RmseSweep sweep;
  sweep.event_delay = event_delay;
  sweep.expected_delay_ms = static_cast<double>(event_delay + base.delays.compute) * 1e-3;
  const std::size_t n = options.speeds_deg_s.size();
  std::vector<ExperimentConfig> configs(n);
  for (std::size_t i = 0; i < n; ++i) {
    ExperimentConfig c = base;
    c.scenario = Scenario::constant_rate_sweep;
    c.reference_kind = ReferenceKind::constant_rate;
    c.feedback = FeedbackSource::vision;
    c.reference.rate = deg2rad(options.speeds_deg_s[i]);
    c.reference.onset = 0;
    c.delays.event = event_delay;
    c.duration = options.duration;
    c.log_events = false;
    c.record_timing = false;
    c.validate();
    configs[i] = c;
  }
  std::vector<RunSummary> summaries(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const RunReport rep = run_experiment(configs[i]);
    if (!rep.ok) throw FaultError("rmse sweep at " + fmt(options.speeds_deg_s[i], 0) + " deg/s: " + rep.fault);
    summaries[i] = rep.summary;
  });
  for (std::size_t i = 0; i < n; ++i) {
    sweep.samples.push_back({options.speeds_deg_s[i], summaries[i].rmse_deg});
  }
  sweep.summaries = std::move(summaries);
  try {
    sweep.delay = delay_from_rmse(sweep.samples, options.baseline_deg);
  } catch (const AnalysisError& e) {
    sweep.delay_error = e.what();
  }
  return sweep;
}

bool SuiteResult::passed() const {
  if (!runs_ok) return false;
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.informational || c.passed; });
}

std::vector<std::string> suite_names() {
  return {"rmse_sweep", "bode_vision", "bode_encoder", "bode_compare", "step_compare", "inertia_id"};
}

SuiteResult run_suite(std::string_view name, const SuiteOptions& o) {
  o.base.validate();

  if (name == "rmse_sweep") {
    SuiteResult r;
    r.name = name;
    RmseOptions ro;
    ro.threads = o.threads;
    r.report = {{"baseline_deg", ro.baseline_deg}, {"sweeps", nlohmann::json::array()}};
    for (const Micros d : o.rmse_event_delays) {
      RmseSweep sweep;
      try {
        sweep = run_rmse_sweep(o.base, d, ro);
      } catch (const FaultError& e) {
        r.runs_ok = false;
        r.checks.push_back({"rmse sweep, event delay " + fmt(d * 1e-3, 1) + " ms", false, false, e.what()});
        continue;
      }
      nlohmann::json s = {{"event_delay_us", d}, {"expected_delay_ms", sweep.expected_delay_ms}};
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < sweep.samples.size(); ++i) {
        rows.push_back({{"speed_deg_s", sweep.samples[i].speed_deg_s},
                        {"rmse_deg", json_number(sweep.samples[i].rmse_deg)},
                        {"availability_pct", json_number(sweep.summaries[i].availability_pct)}});
      }
      s["samples"] = rows;
      if (sweep.delay) s["fit"] = to_json(*sweep.delay);
      else s["fit_error"] = sweep.delay_error;
      r.report["sweeps"].push_back(s);
      if (o.out_dir) {
        auto out = open_out(*o.out_dir / ("rmse_delay_" + std::to_string(d) + "us.csv"));
        write_rmse_csv(out, sweep.samples, sweep.delay ? sweep.delay->used : std::vector<bool>{});
      }

      if (sweep.event_delay == 0) {
        for (const RmseSample& smp : sweep.samples) {
          if (smp.speed_deg_s > 200.0) continue;
          r.checks.push_back({"zero-delay RMSE < 2.5 deg at " + fmt(smp.speed_deg_s, 0) + " deg/s",
                              smp.rmse_deg < 2.5, false, "RMSE " + fmt(smp.rmse_deg) + " deg"});
        }
      } else {
        const std::string label = "delay recovered for " + fmt(sweep.expected_delay_ms, 1) + " ms injected";
        if (sweep.delay) {
          const double err = sweep.delay->slope_ms - sweep.expected_delay_ms;
          r.checks.push_back({label, std::abs(err) <= o.rmse_delay_tolerance_ms, false,
                              "slope " + fmt(sweep.delay->slope_ms, 2) + " +- " + fmt(sweep.delay->stderr_ms, 2) +
                                  " ms"});
        } else {
          r.checks.push_back({label, false, false, sweep.delay_error});
        }
      }
    }
    if (o.out_dir) open_out(*o.out_dir / "rmse_report.json") << r.report.dump(2) << '\n';
    return r;
  }

  if (name == "bode_vision") return bode_single(o, FeedbackSource::vision, "bode_vision");
  if (name == "bode_encoder") return bode_single(o, FeedbackSource::encoder, "bode_encoder");

  if (name == "bode_compare") {
    SuiteResult r;
    r.name = name;
    SuiteResult vis = bode_single(o, FeedbackSource::vision, "bode_vision");
    SuiteResult enc = bode_single(o, FeedbackSource::encoder, "bode_encoder");
    r.runs_ok = vis.runs_ok && enc.runs_ok;
    r.checks = vis.checks;
    r.checks.insert(r.checks.end(), enc.checks.begin(), enc.checks.end());
    const double expected =
        static_cast<double>(o.base.delays.event + o.base.delays.compute - o.base.delays.encoder) * 1e-3;
    r.report = {{"vision", vis.report}, {"encoder", enc.report}, {"expected_difference_ms", expected}};
    const bool have = vis.report.contains("fit") && enc.report.contains("fit");
    SuiteCheck c{"T_d(vision) - T_d(encoder) = " + fmt(expected, 1) + " +- " + fmt(o.bode_delay_tolerance_ms, 1) +
                     " ms",
                 false, false, "no fit"};
    if (have) {
      const double diff = vis.report["fit"]["delay_ms"].get<double>() - enc.report["fit"]["delay_ms"].get<double>();
      r.report["measured_difference_ms"] = diff;
      c.passed = std::abs(diff - expected) <= o.bode_delay_tolerance_ms;
      c.detail = "measured " + fmt(diff, 2) + " ms";
    }
    r.checks.push_back(c);
    if (o.out_dir) open_out(*o.out_dir / "bode_compare.json") << r.report.dump(2) << '\n';
    return r;
  }

  if (name == "step_compare") {
    SuiteResult r;
    r.name = name;
    const FeedbackSource sources[] = {FeedbackSource::vision, FeedbackSource::encoder};
    std::vector<RunReport> reports(2);
    parallel_for(2, o.threads, [&](std::size_t i) {
      ExperimentConfig c = with_feedback(o.base, sources[i]);
      c.scenario = Scenario::step;
      c.reference_kind = ReferenceKind::step;
      c.excitation = Excitation::setpoint;
      if (c.reference.amplitude == 0.0) c.reference.amplitude = deg2rad(90.0);
      if (c.reference.onset == 0) c.reference.onset = 200000;
      c.duration = std::max(c.duration, 3.0);
      c.metrics_skip = micros_to_seconds(c.reference.onset);
      reports[i] = run_experiment(c);
    });
    r.report = nlohmann::json::object();
    for (std::size_t i = 0; i < 2; ++i) {
      const std::string key(to_string(sources[i]));
      r.runs_ok = r.runs_ok && reports[i].ok;
      r.report[key] = to_json(reports[i].summary);
      if (o.out_dir) write_run(reports[i], *o.out_dir / ("step_" + key));
      const RunSummary& s = reports[i].summary;
      r.checks.push_back({key + " step response", reports[i].ok, true,
                          "rise " + fmt(s.rise_time.value_or(NAN)) + " s, overshoot " +
                              fmt(s.overshoot_pct.value_or(NAN), 1) + " %, settling " +
                              fmt(s.settling_time.value_or(NAN)) + " s"});
    }
    if (o.out_dir) open_out(*o.out_dir / "step_compare.json") << r.report.dump(2) << '\n';
    return r;
  }

  if (name == "inertia_id") {
    SuiteResult r;
    r.name = name;
    ExperimentConfig c = with_feedback(o.base, FeedbackSource::encoder);
    c.gains.synthesize = false;
    c.gains.k_p = 0.353;
    c.gains.k_d = 0.012;
    BodeOptions bo;
    bo.threads = o.threads;
    const BodeSweep sweep = run_bode_sweep(c, bo);
    for (const BodeRun& run : sweep.runs) r.runs_ok = r.runs_ok && run.ok;
    r.report = bode_json(sweep);
    SuiteCheck check{"inertia from the encoder-loop Bode fit", false, true, sweep.fit_error};
    if (sweep.fit) {
      try {
        const double wn = natural_frequency(sweep.fit->fit);
        const double j = inertia_from_bode(wn, c.gains.k_p);
        r.report["omega_n_rad_s"] = wn;
        r.report["inertia_kg_m2"] = j;
        check.passed = true;
        check.detail = "omega_n " + fmt(wn, 2) + " rad/s, J " + fmt(j, 5) + " kg m^2 (plant " +
                       fmt(c.plant.inertia, 5) + ")";
      } catch (const AnalysisError& e) {
        check.detail = e.what();
      }
    }
    r.checks.push_back(check);
    if (o.out_dir) {
      auto out = open_out(*o.out_dir / "bode_inertia.csv");
      write_bode_csv(out, sweep.points);
      open_out(*o.out_dir / "inertia_id.json") << r.report.dump(2) << '\n';
    }
    return r;
  }

  throw ConfigError("unknown suite '" + std::string(name) + "'");
}

}  // namespace evtrack
