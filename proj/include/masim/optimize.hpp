#pragma once

#include <functional>

#include "masim/common.hpp"

namespace masim {

struct MinResult {
  double x = 0.0;
  double value = 0.0;
  bool converged = false;
  int evaluations = 0;
};

/// Golden-section minimization on [lo, hi]. The function may return +inf
/// inside the bracket (domain holes are treated as large values).
MinResult golden_minimize(const std::function<double(double)>& f, double lo,
                          double hi, double tol = 1e-10, int max_iter = 200);

/// Minimize over x > 0 by log-grid bracketing (points_per_decade points per
/// decade over [lo, hi]) followed by golden-section refinement of the best
/// bracket. Deterministic given the grid.
MinResult log_grid_minimize(const std::function<double(double)>& f,
                            double lo = 1e-4, double hi = 1e4,
                            int points_per_decade = 64, double tol = 1e-10);

/// Bisection root of a continuous function with f(lo), f(hi) of opposite
/// sign. Throws RootNotBracketed otherwise.
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double tol = 1e-12, int max_iter = 200);

/// Expand [0, step] geometrically until f changes sign, then bisect.
/// f(0+) is expected negative; throws RootNotBracketed if no sign change
/// is found before `limit`.
double expand_and_bisect_root(const std::function<double(double)>& f,
                              double step, double limit, double tol = 1e-12);

}  // namespace masim
