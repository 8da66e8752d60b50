#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "evtrack/config.hpp"
#include "evtrack/error.hpp"
#include "evtrack/logs.hpp"

using namespace evtrack;

namespace {

RunReport small_run() {
  ExperimentConfig c;
  c.reference.amplitude = deg2rad(15.0);
  c.reference.onset = 20000;
  c.duration = 0.3;
  return run_experiment(c);
}

}  // namespace

TEST(Logs, CsvRoundTripsBitExact) {
  const RunReport r = small_run();
  std::stringstream tr, es, cm, ev;
  write_trajectory_csv(tr, r.logs.trajectory);
  write_estimates_csv(es, r.logs.estimates);
  write_commands_csv(cm, r.logs.commands);
  write_events_csv(ev, r.logs.events);

  const auto tr2 = read_trajectory_csv(tr);
  ASSERT_EQ(tr2.size(), r.logs.trajectory.size());
  for (std::size_t i = 0; i < tr2.size(); ++i) {
    EXPECT_EQ(tr2[i].alpha_true_deg, r.logs.trajectory[i].alpha_true_deg);
    EXPECT_EQ(tr2[i].f2, r.logs.trajectory[i].f2);
  }
  const auto es2 = read_estimates_csv(es);
  ASSERT_EQ(es2.size(), r.logs.estimates.size());
  for (std::size_t i = 0; i < es2.size(); ++i) {
    const double a = es2[i].meas_deg, b = r.logs.estimates[i].meas_deg;
    EXPECT_TRUE(a == b || (std::isnan(a) && std::isnan(b)));
    EXPECT_EQ(es2[i].alpha_est_deg, r.logs.estimates[i].alpha_est_deg);
    EXPECT_EQ(es2[i].tick_compute_us, r.logs.estimates[i].tick_compute_us);
  }
  const auto cm2 = read_commands_csv(cm);
  ASSERT_EQ(cm2.size(), r.logs.commands.size());
  EXPECT_EQ(cm2.back().duty1, r.logs.commands.back().duty1);
  EXPECT_EQ(read_events_csv(ev), r.logs.events);
}

TEST(Logs, HeadersMatchFormats) {
  std::stringstream s;
  write_bode_csv(s, std::vector<BodePoint>{{1.0, -3.0, -45.0}});
  EXPECT_EQ(s.str(), std::string(kBodeHeader) + "\n1,-3,-45\n");
  std::stringstream r;
  write_rmse_csv(r, std::vector<RmseSample>{{100, 1.5}, {200, 2.5}}, {false, true});
  EXPECT_EQ(r.str(), std::string(kRmseHeader) + "\n100,1.5,0\n200,2.5,1\n");
}

TEST(Logs, ReadersRejectMalformedInput) {
  std::stringstream bad_header("t,x,y,p\n1,2,3,1\n");
  EXPECT_THROW(read_events_csv(bad_header), ConfigError);
  std::stringstream bad_pol(std::string(kEventHeader) + "\n0,1,1,0\n");
  EXPECT_THROW(read_events_csv(bad_pol), ConfigError);
  std::stringstream backwards(std::string(kEventHeader) + "\n5,1,1,1\n4,1,1,1\n");
  EXPECT_THROW(read_events_csv(backwards), ConfigError);
  std::stringstream short_row(std::string(kBodeHeader) + "\n1,2\n");
  EXPECT_THROW(read_bode_csv(short_row), ConfigError);
  std::stringstream junk(std::string(kBodeHeader) + "\n1,x,3\n");
  EXPECT_THROW(read_bode_csv(junk), ConfigError);
}

TEST(Logs, RunDirectoryRecomputesSummary) {
  const RunReport r = small_run();
  const auto dir = std::filesystem::path(::testing::TempDir()) / "evtrack_run";
  std::filesystem::remove_all(dir);
  write_run(r, dir);
  for (const char* f : {RunFiles::config_ini, RunFiles::config_json, RunFiles::trajectory, RunFiles::estimates,
                        RunFiles::commands, RunFiles::events, RunFiles::summary}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const StoredRun back = read_run(dir);
  EXPECT_EQ(to_json(back.config), to_json(r.config));
  EXPECT_EQ(to_json(summarize(back.logs, back.config)), to_json(r.summary));
  EXPECT_TRUE(back.summary["ok"].get<bool>());
}

TEST(Logs, JsonNumbers) {
  EXPECT_TRUE(json_number(NAN).is_null());
  EXPECT_TRUE(json_number(INFINITY).is_null());
  EXPECT_EQ(json_number(1.5).get<double>(), 1.5);
  RunSummary s;
  EXPECT_TRUE(to_json(s)["overshoot_pct"].is_null());
}
