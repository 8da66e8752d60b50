#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evtrack/nelder_mead.hpp"

namespace evtrack {

/// One measured point of a frequency response.
struct BodePoint {
  double omega = 0.0;      ///< [rad/s]
  double gain_db = 0.0;
  double phase_deg = 0.0;  ///< unwrapped across the sweep
};

/// K exp(-s T_d) / (1 + a1 s + a2 s^2 + a3 s^3).
struct TransferFit {
  double K = 1.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double delay = 0.0;  ///< dead time T_d [s]

  std::complex<double> response(double omega) const;
  double gain_db(double omega) const;
  /// Phase [deg] at each frequency, continuous from 0 at omega -> 0.
  /// `omegas` must be ascending.
  std::vector<double> phase_deg(std::span<const double> omegas) const;
  /// Synthetic measurements of this model.
  std::vector<BodePoint> sample(std::span<const double> omegas) const;
};

/// Least-squares sine fit of a logged response to an input A sin(omega t).
///
/// `t` is measured from the start of the sinusoid. Samples before
/// `transient` seconds are discarded and the rest is trimmed to a whole
/// number of periods, of which there must be at least `min_periods`
/// (AnalysisError otherwise). The output is fitted as
/// a sin + b cos + offset. When `previous_phase_deg` is given the phase is
/// unwrapped against it; otherwise it is returned in (-180, 180].
BodePoint extract_response(std::span<const double> t, std::span<const double> output, double omega,
                           double amplitude, double transient,
                           std::optional<double> previous_phase_deg = std::nullopt,
                           int min_periods = 5);

/// Unwraps a sweep sorted by frequency so neighbouring phases differ by
/// less than 180 deg, keeping the first point where it is.
void unwrap_phases(std::vector<BodePoint>& points);

struct FitOptions {
  double phase_weight = 1.0;  ///< 1 dB counts as much as this many degrees
  int starts = 5;             ///< perturbed initialisations around the guess
  int polish_rounds = 12;     ///< simplex restarts from the incumbent
  std::uint64_t seed = 0x5eed;
  SimplexConfig simplex{};
};

struct FitResult {
  TransferFit fit;
  double residual = 0.0;  ///< sum of absolute gain (dB) and weighted phase (deg) errors
  bool converged = false;
  std::size_t evaluations = 0;
};

/// Sum of |gain error| + weight * |phase error| over the points.
double bode_residual(const TransferFit& model, std::span<const BodePoint> points, double phase_weight = 1.0);

/// Starting point derived from the data: K from the lowest-frequency gain, a
/// damped second-order pair at the -90 deg crossing with a fast third pole,
/// and the dead time from the high-frequency phase slope.
TransferFit initial_guess(std::span<const BodePoint> points);

/// Fits the third-order-plus-delay model by minimising bode_residual with
/// the simplex method. Requires at least 6 points spanning a decade
/// (AnalysisError otherwise).
FitResult fit_transfer(std::span<const BodePoint> points, std::optional<TransferFit> init = std::nullopt,
                       const FitOptions& options = {});

struct RmseSample {
  double speed_deg_s = 0.0;
  double rmse_deg = 0.0;
};

struct DelayEstimate {
  double slope_ms = 0.0;   ///< RMSE growth per unit speed, i.e. the delay
  double stderr_ms = 0.0;
  double intercept_deg = 0.0;
  std::vector<bool> used;  ///< which samples were above the baseline
};

/// Ordinary least squares through the samples whose RMSE exceeds
/// `baseline_deg`; needs at least three of them (AnalysisError otherwise).
DelayEstimate delay_from_rmse(std::span<const RmseSample> samples, double baseline_deg);

/// Undamped natural frequency of the slow pole pair of a fitted model:
/// |p| of the complex pair, or sqrt(p1 p2) of the two slowest real poles.
double natural_frequency(const TransferFit& fit);

/// tau = 1 / omega_n, J = k_p tau^2.
double inertia_from_bode(double omega_n, double k_p);
double inertia_from_bode(const TransferFit& fit, double k_p);

/// Root mean square of a - b.
double rmse(std::span<const double> a, std::span<const double> b);

struct StepMetrics {
  double rise_time = 0.0;      ///< 10% to 90% [s]
  double overshoot_pct = 0.0;  ///< peak beyond the target, percent of the step
  double settling_time = 0.0;  ///< last exit from the 2% band [s]
};

/// Step-response figures for y(t) moving from `initial` to `target`.
StepMetrics step_metrics(std::span<const double> t, std::span<const double> y, double initial, double target);

}  // namespace evtrack
