#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace evtrack {

struct SimplexConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double tol_x = 1e-10;   ///< stop when every vertex is this close to the best one
  double tol_f = 1e-14;   ///< stop when every value is this close to the best one
  std::size_t max_iter = 20000;
  /// Initial simplex: coordinate i is scaled by (1 + nonzero_step), or set to
  /// zero_step when it is zero.
  double nonzero_step = 0.05;
  double zero_step = 0.00025;

  void validate() const;
};

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Derivative-free minimisation with reflect / expand / contract / shrink
/// moves. Hitting max_iter is reported through `converged`, not thrown.
SimplexResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                          const SimplexConfig& config = {});

/// Observer variant: on_iteration(best_value) is called after every iteration.
SimplexResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                          const SimplexConfig& config,
                          const std::function<void(double)>& on_iteration);

}  // namespace evtrack
