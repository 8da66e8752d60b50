#include <cmath>

#include <gtest/gtest.h>

#include "evtrack/nelder_mead.hpp"

using namespace evtrack;

TEST(NelderMead, Rosenbrock) {
  const Objective f = [](const std::vector<double>& v) {
    return 100 * std::pow(v[1] - v[0] * v[0], 2) + std::pow(1 - v[0], 2);
  };
  const SimplexResult r = nelder_mead(f, {-1.2, 1.0});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
  EXPECT_LT(r.f, 1e-8);
}

TEST(NelderMead, QuadraticInFiveDimensions) {
  const Objective f = [](const std::vector<double>& v) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i + 1.0) * std::pow(v[i] - static_cast<double>(i), 2);
    return s;
  };
  const SimplexResult r = nelder_mead(f, {0, 0, 0, 0, 0});
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.x[i], static_cast<double>(i), 1e-4);
}

TEST(NelderMead, ObserverSeesMonotoneBest) {
  const Objective f = [](const std::vector<double>& v) { return v[0] * v[0] + std::abs(v[1]); };
  double last = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::size_t calls = 0;
  const SimplexResult r = nelder_mead(f, {3.0, -2.0}, SimplexConfig{}, [&](double best) {
    monotone = monotone && best <= last;
    last = best;
    ++calls;
  });
  EXPECT_TRUE(monotone);
  EXPECT_EQ(calls, r.iterations);
}

TEST(NelderMead, IterationCapIsReported) {
  SimplexConfig c;
  c.max_iter = 5;
  const Objective f = [](const std::vector<double>& v) {
    return 100 * std::pow(v[1] - v[0] * v[0], 2) + std::pow(1 - v[0], 2);
  };
  const SimplexResult r = nelder_mead(f, {-1.2, 1.0}, c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 5u);
}
