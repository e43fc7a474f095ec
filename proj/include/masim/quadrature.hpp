#pragma once

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "masim/common.hpp"

namespace masim {

struct QuadTol {
  double abs = 1e-9;
  double rel = 1e-9;
};

/// Adaptive quadrature on a finite interval. tanh-sinh handles the endpoint
/// derivative singularities of the memory kernel exactly where Gauss rules
/// stall. Throws QuadratureTolNotMet when the final error estimate exceeds
/// the requested tolerance.
template <typename F>
double integrate(F&& f, double a, double b, QuadTol tol = {}) {
  if (!(a <= b)) throw InvalidParameter("integrate: a > b");
  if (a == b) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  double err = 0.0, l1 = 0.0;
  std::size_t levels = 0;
  double v = ts.integrate(f, a, b, 0.1 * tol.rel, &err, &l1, &levels);
  if (std::isnan(v)) throw DivergentTerm("integrand produced NaN");
  if (err > tol.abs + tol.rel * std::max(std::abs(v), l1))
    throw QuadratureTolNotMet("interval [" + std::to_string(a) + "," +
                              std::to_string(b) + "], err estimate " +
                              std::to_string(err));
  return v;
}

/// Integral over [a, inf) of an eventually power-law-decaying integrand.
/// Dyadic blocks [a 2^k, a 2^(k+1)) are accumulated until negligible; a
/// block sequence that stops shrinking is reported as divergent.
template <typename F>
double integrate_tail(F&& f, double a, QuadTol tol = {}) {
  if (a <= 0.0) throw InvalidParameter("integrate_tail: a must be > 0");
  double total = 0.0;
  double lo = a;
  double prev = kInf;
  for (int k = 0; k < 2000; ++k) {
    double hi = lo * 2.0;
    double piece = integrate(f, lo, hi, tol);
    total += piece;
    double mag = std::abs(piece);
    if (mag < tol.abs * 0.01 + tol.rel * 0.01 * std::abs(total) &&
        mag <= prev) {
      return total;
    }
    if (k > 60 && mag > 0.9 * prev)
      throw DivergentTerm("tail blocks not decaying from x=" +
                          std::to_string(lo));
    prev = mag;
    lo = hi;
  }
  throw QuadratureTolNotMet("tail did not converge from a=" +
                            std::to_string(a));
}

}  // namespace masim
