#include "evtrack/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evtrack/error.hpp"

namespace evtrack {

void SimplexConfig::validate() const {
  if (!(reflection > 0.0)) throw ConfigError("simplex: reflection must be > 0");
  if (!(expansion > 1.0 && expansion > reflection)) throw ConfigError("simplex: expansion must exceed 1 and reflection");
  if (!(contraction > 0.0 && contraction < 1.0)) throw ConfigError("simplex: contraction must be in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("simplex: shrink must be in (0, 1)");
  if (!(tol_x >= 0.0) || !(tol_f >= 0.0)) throw ConfigError("simplex: tolerances must be >= 0");
}

SimplexResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                          const SimplexConfig& config) {
  return nelder_mead(objective, x0, config, {});
}

SimplexResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                          const SimplexConfig& config,
                          const std::function<void(double)>& on_iteration) {
  config.validate();
  const std::size_t n = x0.size();
  if (n == 0) throw ContractViolation("nelder_mead: empty starting point");

  SimplexResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isnan(v) ? HUGE_VAL : v;
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    double& c = simplex[i + 1][i];
    c = c != 0.0 ? c * (1.0 + config.nonzero_step) : config.zero_step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      v[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(v);
  };

  auto converged = [&] {
    double size = 0.0;
    double spread = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      spread = std::max(spread, std::abs(values[i] - values[0]));
      for (std::size_t j = 0; j < n; ++j) size = std::max(size, std::abs(simplex[i][j] - simplex[0][j]));
    }
    return size <= config.tol_x || spread <= config.tol_f;
  };

  auto blend = [n](const std::vector<double>& from, const std::vector<double>& to, double t) {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = from[j] + t * (to[j] - from[j]);
    return x;
  };

  sort_simplex();
  while (!converged()) {
    if (result.iterations >= config.max_iter) break;
    ++result.iterations;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    }
    const auto& worst = simplex[n];

    const std::vector<double> xr = blend(centroid, worst, -config.reflection);
    const double fr = eval(xr);
    if (fr < values[0]) {
      const std::vector<double> xe = blend(centroid, worst, -config.reflection * config.expansion);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[n] = xe;
        values[n] = fe;
      } else {
        simplex[n] = xr;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = xr;
      values[n] = fr;
    } else {
      bool do_shrink = false;
      if (fr < values[n]) {
        const std::vector<double> xc = blend(centroid, worst, -config.reflection * config.contraction);
        const double fc = eval(xc);
        if (fc <= fr) {
          simplex[n] = xc;
          values[n] = fc;
        } else {
          do_shrink = true;
        }
      } else {
        const std::vector<double> xcc = blend(centroid, worst, config.contraction);
        const double fcc = eval(xcc);
        if (fcc < values[n]) {
          simplex[n] = xcc;
          values[n] = fcc;
        } else {
          do_shrink = true;
        }
      }
      if (do_shrink) {
        for (std::size_t i = 1; i <= n; ++i) {
          simplex[i] = blend(simplex[0], simplex[i], config.shrink);
          values[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
    if (on_iteration) on_iteration(values[0]);
  }

  result.x = simplex[0];
  result.f = values[0];
  result.converged = converged();
  return result;
}

}  // namespace evtrack
