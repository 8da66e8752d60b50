#include "evtrack/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "evtrack/error.hpp"
#include "evtrack/units.hpp"

namespace evtrack {

namespace {

std::complex<double> denominator(const TransferFit& f, double omega) {
  const double w2 = omega * omega;
  return {1.0 - f.a2 * w2, f.a1 * omega - f.a3 * w2 * omega};
}

double wrap_to_pi(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

}  // namespace

std::complex<double> TransferFit::response(double omega) const {
  return K * std::polar(1.0, -omega * delay) / denominator(*this, omega);
}

double TransferFit::gain_db(double omega) const {
  return 20.0 * std::log10(std::abs(K)) - 20.0 * std::log10(std::abs(denominator(*this, omega)));
}

std::vector<double> TransferFit::phase_deg(std::span<const double> omegas) const {
  // March arg D(jw) up from w -> 0, where it is 0, so the result is
  // continuous regardless of how many half-turns the cubic takes.
  constexpr int kSubsteps = 24;
  std::vector<double> out;
  out.reserve(omegas.size());
  double prev_w = 0.0;
  double arg = 0.0;
  double prev_wrapped = 0.0;
  auto advance_to = [&](double w) {
    const double wrapped = std::arg(denominator(*this, w));
    arg += wrap_to_pi(wrapped - prev_wrapped);
    prev_wrapped = wrapped;
  };
  for (double w : omegas) {
    if (w < prev_w) throw ContractViolation("phase_deg: frequencies must be ascending");
    if (w > prev_w) {
      const double start = prev_w > 0.0 ? prev_w : w * 1e-4;
      if (prev_w == 0.0) advance_to(start);
      const double ratio = std::pow(w / start, 1.0 / kSubsteps);
      double x = start;
      for (int i = 0; i < kSubsteps; ++i) {
        x = i + 1 == kSubsteps ? w : x * ratio;
        advance_to(x);
      }
      prev_w = w;
    }
    out.push_back(rad2deg(-arg - w * delay));
  }
  return out;
}

std::vector<BodePoint> TransferFit::sample(std::span<const double> omegas) const {
  const std::vector<double> phase = phase_deg(omegas);
  std::vector<BodePoint> points;
  for (std::size_t i = 0; i < omegas.size(); ++i) points.push_back({omegas[i], gain_db(omegas[i]), phase[i]});
  return points;
}

BodePoint extract_response(std::span<const double> t, std::span<const double> output, double omega,
                           double amplitude, double transient, std::optional<double> previous_phase_deg,
                           int min_periods) {
  if (t.size() != output.size()) throw AnalysisError("extract_response: time and output lengths differ");
  if (!(omega > 0.0) || !(amplitude > 0.0)) throw AnalysisError("extract_response: omega and amplitude must be > 0");
  if (t.empty()) throw AnalysisError("extract_response: empty log");

  const double period = 2.0 * kPi / omega;
  const double periods = std::floor((t.back() - transient) / period + 1e-9);
  if (periods < min_periods) {
    throw AnalysisError("extract_response: window holds " + std::to_string(static_cast<int>(std::max(periods, 0.0))) +
                        " whole periods after the transient, need " + std::to_string(min_periods));
  }
  const double start = t.back() - periods * period;

  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < start - 1e-12) continue;
    const Eigen::Vector3d row(std::sin(omega * t[i]), std::cos(omega * t[i]), 1.0);
    normal += row * row.transpose();
    rhs += row * output[i];
  }
  const Eigen::Vector3d coef = normal.ldlt().solve(rhs);

  BodePoint p;
  p.omega = omega;
  p.gain_db = 20.0 * std::log10(std::hypot(coef[0], coef[1]) / amplitude);
  p.phase_deg = rad2deg(std::atan2(coef[1], coef[0]));
  if (previous_phase_deg) p.phase_deg += 360.0 * std::round((*previous_phase_deg - p.phase_deg) / 360.0);
  return p;
}

void unwrap_phases(std::vector<BodePoint>& points) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double prev = points[i - 1].phase_deg;
    points[i].phase_deg += 360.0 * std::round((prev - points[i].phase_deg) / 360.0);
  }
}

double bode_residual(const TransferFit& model, std::span<const BodePoint> points, double phase_weight) {
  std::vector<double> omegas;
  omegas.reserve(points.size());
  for (const BodePoint& p : points) omegas.push_back(p.omega);
  const std::vector<double> phase = model.phase_deg(omegas);
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum += std::abs(model.gain_db(points[i].omega) - points[i].gain_db);
    sum += phase_weight * std::abs(phase[i] - points[i].phase_deg);
  }
  return sum;
}

namespace {

void check_sweep(std::span<const BodePoint> points) {
  if (points.size() < 6) throw AnalysisError("fit_transfer: need at least 6 Bode points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].omega > 0.0)) throw AnalysisError("fit_transfer: frequencies must be > 0");
    if (i > 0 && !(points[i].omega > points[i - 1].omega)) {
      throw AnalysisError("fit_transfer: frequencies must be strictly ascending");
    }
  }
  if (points.back().omega < 10.0 * points.front().omega) {
    throw AnalysisError("fit_transfer: points must span at least one decade");
  }
}

// Search coordinates keep every coefficient positive and roughly unit-scaled.
std::vector<double> to_search(const TransferFit& f) {
  auto safe_log = [](double v) { return std::log(std::max(v, 1e-12)); };
  return {f.K, safe_log(f.a1), safe_log(f.a2), safe_log(f.a3), f.delay * 1e3};
}

TransferFit from_search(const std::vector<double>& p) {
  return {p[0], std::exp(p[1]), std::exp(p[2]), std::exp(p[3]), std::max(p[4], 0.0) * 1e-3};
}

}  // namespace

TransferFit initial_guess(std::span<const BodePoint> points) {
  check_sweep(points);
  TransferFit g;
  g.K = std::pow(10.0, points.front().gain_db / 20.0);

  double omega_n = points.back().omega;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].phase_deg <= -90.0) {
      const double p0 = points[i - 1].phase_deg;
      const double p1 = points[i].phase_deg;
      const double frac = p0 > -90.0 ? (p0 + 90.0) / (p0 - p1) : 0.0;
      omega_n = std::exp(std::log(points[i - 1].omega) + frac * std::log(points[i].omega / points[i - 1].omega));
      break;
    }
  }
  const double zeta = 0.7;
  const double fast = 0.1 / omega_n;
  const double a1 = 2.0 * zeta / omega_n;
  const double a2 = 1.0 / (omega_n * omega_n);
  g.a1 = a1 + fast;
  g.a2 = a2 + a1 * fast;
  g.a3 = a2 * fast;

  const BodePoint& hi = points[points.size() - 1];
  const BodePoint& lo = points[points.size() - 2];
  const double omegas[2] = {lo.omega, hi.omega};
  const std::vector<double> model = g.phase_deg(omegas);
  const double excess = (hi.phase_deg - lo.phase_deg) - (model[1] - model[0]);
  g.delay = std::max(0.0, -deg2rad(excess) / (hi.omega - lo.omega));
  return g;
}

FitResult fit_transfer(std::span<const BodePoint> points, std::optional<TransferFit> init,
                       const FitOptions& options) {
  check_sweep(points);
  const TransferFit guess = init ? *init : initial_guess(points);
  std::size_t evaluations = 0;

  const Objective objective = [&](const std::vector<double>& p) {
    const TransferFit f = from_search(p);
    double penalty = 0.0;
    if (p[4] < 0.0) penalty = 1e3 * -p[4];
    return bode_residual(f, points, options.phase_weight) + penalty;
  };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> log_jitter(0.0, 0.4);
  std::uniform_real_distribution<double> delay_jitter(-2.0, 2.0);

  FitResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int s = 0; s < std::max(options.starts, 1); ++s) {
    std::vector<double> x = to_search(guess);
    if (s > 0) {
      x[0] *= std::exp(0.1 * log_jitter(rng));
      for (int k = 1; k <= 3; ++k) x[k] += log_jitter(rng);
      x[4] = std::max(0.0, x[4] + delay_jitter(rng));
    }
    SimplexResult r = nelder_mead(objective, x, options.simplex);
    evaluations += r.evaluations;
    for (int round = 0; round < options.polish_rounds; ++round) {
      SimplexResult again = nelder_mead(objective, r.x, options.simplex);
      evaluations += again.evaluations;
      const bool improved = again.f < r.f - 1e-12 * std::max(1.0, std::abs(r.f));
      if (again.f <= r.f) r = again;
      if (!improved) break;
    }
    const TransferFit f = from_search(r.x);
    const bool better = r.f < best.residual - 1e-12 ||
                        (std::abs(r.f - best.residual) <= 1e-12 && f.delay < best.fit.delay);
    if (better) {
      best.fit = f;
      best.residual = r.f;
      best.converged = r.converged;
    }
  }
  best.residual = bode_residual(best.fit, points, options.phase_weight);
  best.evaluations = evaluations;
  return best;
}

DelayEstimate delay_from_rmse(std::span<const RmseSample> samples, double baseline_deg) {
  DelayEstimate out;
  out.used.resize(samples.size(), false);
  std::vector<std::pair<double, double>> xy;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].rmse_deg > baseline_deg) {
      out.used[i] = true;
      xy.emplace_back(samples[i].speed_deg_s, samples[i].rmse_deg);
    }
  }
  if (xy.size() < 3) {
    throw AnalysisError("delay_from_rmse: " + std::to_string(xy.size()) +
                        " samples above the baseline, need at least 3");
  }
  const double n = static_cast<double>(xy.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x / n;
    my += y / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw AnalysisError("delay_from_rmse: qualifying samples share one speed");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : xy) {
    const double r = y - (intercept + slope * x);
    sse += r * r;
  }
  const double se = n > 2.0 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  out.slope_ms = slope * 1e3;
  out.stderr_ms = se * 1e3;
  out.intercept_deg = intercept;
  return out;
}

double natural_frequency(const TransferFit& fit) {
  std::vector<std::complex<double>> poles;
  if (fit.a3 > 0.0) {
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(0, 0) = -fit.a2 / fit.a3;
    companion(0, 1) = -fit.a1 / fit.a3;
    companion(0, 2) = -1.0 / fit.a3;
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    const Eigen::Vector3cd ev = companion.eigenvalues();
    for (int i = 0; i < 3; ++i) poles.push_back(ev[i]);
  } else if (fit.a2 > 0.0) {
    const std::complex<double> disc = std::sqrt(std::complex<double>(fit.a1 * fit.a1 - 4.0 * fit.a2));
    poles.push_back((-fit.a1 + disc) / (2.0 * fit.a2));
    poles.push_back((-fit.a1 - disc) / (2.0 * fit.a2));
  } else {
    throw AnalysisError("natural_frequency: model has no second-order part");
  }
  for (const auto& p : poles) {
    if (std::abs(p.imag()) > 1e-9 * std::max(1.0, std::abs(p))) return std::abs(p);
  }
  std::sort(poles.begin(), poles.end(), [](auto a, auto b) { return std::abs(a) < std::abs(b); });
  return std::sqrt(std::abs(poles[0]) * std::abs(poles[1]));
}

double inertia_from_bode(double omega_n, double k_p) {
  if (!(omega_n > 0.0) || !(k_p > 0.0)) throw AnalysisError("inertia_from_bode: omega_n and k_p must be > 0");
  const double tau = 1.0 / omega_n;
  return k_p * tau * tau;
}

double inertia_from_bode(const TransferFit& fit, double k_p) { return inertia_from_bode(natural_frequency(fit), k_p); }

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw AnalysisError("rmse: length mismatch");
  if (a.empty()) throw AnalysisError("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

StepMetrics step_metrics(std::span<const double> t, std::span<const double> y, double initial, double target) {
  if (t.size() != y.size() || t.empty()) throw AnalysisError("step_metrics: bad input");
  const double span = target - initial;
  if (span == 0.0) throw AnalysisError("step_metrics: zero step");
  auto frac = [&](std::size_t i) { return (y[i] - initial) / span; };

  StepMetrics m;
  std::optional<double> t10, t90;
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = frac(i);
    if (!t10 && f >= 0.1) t10 = t[i];
    if (!t90 && f >= 0.9) t90 = t[i];
    peak = std::max(peak, f);
  }
  m.rise_time = (t10 && t90) ? *t90 - *t10 : std::numeric_limits<double>::quiet_NaN();
  m.overshoot_pct = std::max(0.0, (peak - 1.0) * 100.0);
  m.settling_time = t.front();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(frac(i) - 1.0) > 0.02) m.settling_time = i + 1 < t.size() ? t[i + 1] : t[i];
  }
  return m;
}

}  // namespace evtrack
