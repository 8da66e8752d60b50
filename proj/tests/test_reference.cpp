#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "evtrack/error.hpp"
#include "evtrack/reference.hpp"

using namespace evtrack;

TEST(Reference, StepHoldsOffsetBeforeOnset) {
  ReferenceParams p;
  p.amplitude = 0.5;
  p.offset = 0.1;
  p.onset = 1000;
  EXPECT_DOUBLE_EQ(reference_signal(ReferenceKind::step, p, 999), 0.1);
  EXPECT_DOUBLE_EQ(reference_signal(ReferenceKind::step, p, 1000), 0.6);
  EXPECT_DOUBLE_EQ(reference_rate(ReferenceKind::step, p, 5000), 0.0);
}

TEST(Reference, SineAndRampRatesAreDerivatives) {
  ReferenceParams p;
  p.amplitude = 0.3;
  p.omega = 4.0;
  p.rate = 2.0;
  p.omega_end = 20.0;
  p.chirp_duration = 2.0;
  for (ReferenceKind k : {ReferenceKind::sine, ReferenceKind::constant_rate, ReferenceKind::chirp}) {
    for (Micros t : {100000, 700000, 1500000}) {
      const double numeric = (reference_signal(k, p, t + 1) - reference_signal(k, p, t - 1)) / 2e-6;
      EXPECT_NEAR(reference_rate(k, p, t), numeric, 1e-4 * std::max(1.0, std::abs(numeric)))
          << to_string(k) << " at " << t;
    }
  }
}

TEST(Reference, ManualChannelHoldsLatest) {
  ManualChannel ch(0.25);
  EXPECT_DOUBLE_EQ(reference_signal(ReferenceKind::manual, {}, 0, &ch), 0.25);
  std::thread producer([&] { ch.push(1.5); });
  producer.join();
  EXPECT_DOUBLE_EQ(reference_signal(ReferenceKind::manual, {}, 10, &ch), 1.5);
  EXPECT_DOUBLE_EQ(reference_signal(ReferenceKind::manual, {}, 10, nullptr), 0.0);
}

TEST(Reference, ParsingAndValidation) {
  EXPECT_EQ(parse_reference_kind("chirp"), ReferenceKind::chirp);
  EXPECT_THROW(parse_reference_kind("square"), ConfigError);
  ReferenceParams p;
  p.omega = -1;
  EXPECT_THROW(p.validate(ReferenceKind::sine), ConfigError);
  p = {};
  p.amplitude = NAN;
  EXPECT_THROW(p.validate(ReferenceKind::step), ConfigError);
}
