#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "evtrack/error.hpp"
#include "evtrack/suite.hpp"
#include "evtrack/sysid.hpp"

using namespace evtrack;

namespace {

TransferFit reference_model() {
  TransferFit m;
  m.K = 1.0;
  m.a1 = 0.2;
  m.a2 = 0.0222;
  m.a3 = 0.0004;
  m.delay = 0.006;
  return m;
}

}  // namespace

TEST(TransferFit, ResponseAtLowFrequencyIsGain) {
  TransferFit m = reference_model();
  m.K = 2.0;
  EXPECT_NEAR(m.gain_db(1e-6), 20 * std::log10(2.0), 1e-6);
  const std::vector<double> w = {1e-6};
  EXPECT_NEAR(m.phase_deg(w)[0], 0.0, 1e-3);
}

TEST(TransferFit, PhaseIsContinuousPastMinus180) {
  const TransferFit m = reference_model();
  const std::vector<double> w = log_space(0.1, 200.0, 200);
  const auto ph = m.phase_deg(w);
  for (std::size_t i = 1; i < ph.size(); ++i) EXPECT_LT(std::abs(ph[i] - ph[i - 1]), 30.0);
  EXPECT_LT(ph.back(), -270.0);
}

TEST(ExtractResponse, RecoversAKnownSinusoid) {
  const double w = 7.0, A = 2.0, gain = 0.6, phase = deg2rad(-40.0);
  std::vector<double> t, y;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int i = 0; i < 8000; ++i) {
    t.push_back(i * 1e-3);
    y.push_back(0.3 + A * gain * std::sin(w * t.back() + phase) + noise(rng));
  }
  const BodePoint p = extract_response(t, y, w, A, 0.5);
  EXPECT_NEAR(p.gain_db, 20 * std::log10(gain), 0.02);
  EXPECT_NEAR(p.phase_deg, -40.0, 0.2);
  const BodePoint q = extract_response(t, y, w, A, 0.5, -400.0);
  EXPECT_NEAR(q.phase_deg, -400.0, 0.2);
}

TEST(ExtractResponse, TooFewPeriods) {
  std::vector<double> t = {0, 0.1, 0.2}, y = {0, 0, 0};
  EXPECT_THROW(extract_response(t, y, 1.0, 1.0, 0.0), AnalysisError);
}

TEST(FitTransfer, SyntheticRoundTrip) {
  const TransferFit truth = reference_model();
  const std::vector<double> w = log_space(0.5, 50.0, 14);
  const FitResult f = fit_transfer(truth.sample(w));
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.fit.K, truth.K, 0.01 * truth.K);
  EXPECT_NEAR(f.fit.a1, truth.a1, 0.01 * truth.a1);
  EXPECT_NEAR(f.fit.a2, truth.a2, 0.01 * truth.a2);
  EXPECT_NEAR(f.fit.a3, truth.a3, 0.01 * truth.a3);
  EXPECT_NEAR(f.fit.delay, truth.delay, 0.5e-3);
}

TEST(FitTransfer, NoisyDataStillNearTruth) {
  const TransferFit truth = reference_model();
  auto pts = truth.sample(log_space(0.5, 50.0, 14));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.1), p(0.0, 0.5);
  for (BodePoint& b : pts) {
    b.gain_db += g(rng);
    b.phase_deg += p(rng);
  }
  const FitResult f = fit_transfer(pts);
  EXPECT_NEAR(f.fit.delay, truth.delay, 1.5e-3);
  EXPECT_NEAR(natural_frequency(f.fit), natural_frequency(truth), 0.05 * natural_frequency(truth));
}

TEST(FitTransfer, NeedsEnoughPoints) {
  const auto pts = reference_model().sample(log_space(1.0, 2.0, 8));
  EXPECT_THROW(fit_transfer(pts), AnalysisError);
  const auto few = reference_model().sample(log_space(0.5, 50.0, 4));
  EXPECT_THROW(fit_transfer(few), AnalysisError);
}

TEST(DelayFromRmse, RecoversSlope) {
  std::vector<RmseSample> s;
  for (double v : {100.0, 200.0, 400.0, 800.0, 1600.0}) s.push_back({v, std::max(1.5, 0.3 + v * 0.012)});
  const DelayEstimate d = delay_from_rmse(s, 2.0);
  EXPECT_NEAR(d.slope_ms, 12.0, 1e-9);
  EXPECT_NEAR(d.intercept_deg, 0.3, 1e-9);
  EXPECT_EQ(d.used, (std::vector<bool>{false, true, true, true, true}));
  s.resize(3);
  EXPECT_THROW(delay_from_rmse(s, 2.0), AnalysisError);
}

TEST(NaturalFrequency, ComplexAndRealPoles) {
  TransferFit f;
  f.a2 = 1.0 / 25.0;
  f.a1 = 2 * 0.3 / 5.0;
  EXPECT_NEAR(natural_frequency(f), 5.0, 1e-9);
  // (1 + s/2)(1 + s/8)(1 + s/100)
  TransferFit r;
  r.a1 = 1.0 / 2 + 1.0 / 8 + 1.0 / 100;
  r.a2 = 1.0 / 16 + 1.0 / 200 + 1.0 / 800;
  r.a3 = 1.0 / 1600;
  EXPECT_NEAR(natural_frequency(r), 4.0, 1e-6);
}

TEST(InertiaFromBode, RoundTrip) {
  EXPECT_NEAR(inertia_from_bode(6.69, 0.353), 0.00788, 0.01 * 0.00788);
  EXPECT_NEAR(inertia_from_bode(1.0 / 0.149, 0.353), 0.353 * 0.149 * 0.149, 1e-15);
}

TEST(StepMetrics, SecondOrderResponse) {
  const double zeta = 0.7, wn = 1 / 0.149, wd = wn * std::sqrt(1 - zeta * zeta);
  std::vector<double> t, y;
  for (int i = 0; i <= 5000; ++i) {
    t.push_back(i * 1e-3);
    const double s = t.back();
    y.push_back(10 + 30 * (1 - std::exp(-zeta * wn * s) *
                                   (std::cos(wd * s) + zeta / std::sqrt(1 - zeta * zeta) * std::sin(wd * s))));
  }
  const StepMetrics m = step_metrics(t, y, 10, 40);
  EXPECT_NEAR(m.overshoot_pct, 100 * std::exp(-kPi * zeta / std::sqrt(1 - zeta * zeta)), 0.01);
  EXPECT_NEAR(m.rise_time, 0.317, 0.003);
  EXPECT_GT(m.settling_time, 0.8);
  EXPECT_LT(m.settling_time, 1.0);
}

TEST(Rmse, Basic) {
  const std::vector<double> a = {1, 2, 3}, b = {1, 2, 5};
  EXPECT_NEAR(rmse(a, b), std::sqrt(4.0 / 3.0), 1e-15);
}
