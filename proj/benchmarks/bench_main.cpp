#include <random>

#include <benchmark/benchmark.h>

#include "evtrack/camera.hpp"
#include "evtrack/estimator.hpp"
#include "evtrack/hough.hpp"
#include "evtrack/suite.hpp"
#include "evtrack/sysid.hpp"

using namespace evtrack;

namespace {

/// Per-tick event batches for a horizon turning at rate_deg_s.
std::vector<std::vector<Event>> recorded_ticks(double rate_deg_s, int ticks) {
  EventCamera cam(CameraModel{}, 1);
  std::vector<std::vector<Event>> out;
  for (int i = 0; i < ticks; ++i) {
    const double a = deg2rad(rate_deg_s * i * 1e-3), b = deg2rad(rate_deg_s * (i + 1) * 1e-3);
    out.push_back(cam.generate(a, b, i * 1000, (i + 1) * 1000));
  }
  return out;
}

void BM_EstimatorTick(benchmark::State& state) {
  const auto batches = recorded_ticks(static_cast<double>(state.range(0)), 2000);
  const Micros period = static_cast<Micros>(batches.size()) * 1000;
  HorizonEstimator est;
  std::vector<Event> batch;
  std::size_t i = 0;
  Micros offset = 0;
  for (auto _ : state) {
    state.PauseTiming();
    batch = batches[i];
    for (Event& e : batch) e.t += offset;
    state.ResumeTiming();
    benchmark::DoNotOptimize(est.tick(batch, 0.0, offset + static_cast<Micros>(i + 1) * 1000));
    if (++i == batches.size()) {
      i = 0;
      offset += period;
    }
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_EstimatorTick)->Arg(100)->Arg(360)->Arg(1600);

void BM_HoughInsertEvict(benchmark::State& state) {
  HoughWindow w;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> xs(0, 239), ys(0, 179);
  Micros t = 0;
  for (auto _ : state) {
    w.insert({static_cast<std::uint16_t>(xs(rng)), static_cast<std::uint16_t>(ys(rng)), 1, ++t});
    if (w.events().size() > w.config().capacity) w.evict_oldest();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_HoughInsertEvict);

void BM_HoughPeak(benchmark::State& state) {
  HoughWindow w;
  const auto batches = recorded_ticks(360.0, 1);
  for (const Event& e : batches[0]) {
    if (w.events().size() == w.config().capacity) w.evict_oldest();
    w.insert(e);
  }
  for (auto _ : state) benchmark::DoNotOptimize(w.peak(0.0));
}
BENCHMARK(BM_HoughPeak);

void BM_CameraGenerate(benchmark::State& state) {
  EventCamera cam(CameraModel{}, 1);
  const double step = deg2rad(static_cast<double>(state.range(0)) * 1e-3);
  double a = 0.0;
  Micros t = 0;
  std::vector<Event> out;
  for (auto _ : state) {
    out.clear();
    cam.generate_into(a, a + step, t, t + 1000, out);
    a += step;
    t += 1000;
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_CameraGenerate)->Arg(100)->Arg(1600);

void BM_FitTransfer(benchmark::State& state) {
  TransferFit truth;
  truth.a1 = 0.2;
  truth.a2 = 0.0222;
  truth.a3 = 0.0004;
  truth.delay = 0.006;
  const auto points = truth.sample(log_space(0.5, 50.0, 12));
  for (auto _ : state) benchmark::DoNotOptimize(fit_transfer(points));
}
BENCHMARK(BM_FitTransfer)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
