// Test-only oracles, independent of the library code paths they check:
// brute-force enumerations, dense grid searches, Monte Carlo integration
// and Simpson quadrature.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "masim/model.hpp"
#include "masim/rng.hpp"

namespace oracles {

// Brute force over every (k, l) pair with the raw definition
// (S_l - S_k)/a_{l-k} > y (open) -- no shifted-sum trick, no prefix minima.
inline long brute_longest_segment(const std::vector<double>& s,
                                  const std::function<double(long)>& a,
                                  double y, bool closed = false) {
  long m = static_cast<long>(s.size()) - 1;
  long best = 0;
  for (long k = 0; k < m; ++k) {
    for (long l = k + 1; l <= m; ++l) {
      double avg = (s[static_cast<size_t>(l)] - s[static_cast<size_t>(k)]) /
                   a(l - k);
      if ((closed ? avg >= y : avg > y) && l - k > best) best = l - k;
    }
  }
  return best;
}

// Dense grid maximization of lambda x - f(lambda) on [lo, hi].
inline double grid_conjugate(const std::function<double(double)>& f, double x,
                             double lo, double hi, long n = 200000) {
  double best = -1e308;
  for (long k = 0; k <= n; ++k) {
    double lam = lo + (hi - lo) * static_cast<double>(k) / n;
    double fv = f(lam);
    if (!std::isfinite(fv)) continue;
    best = std::max(best, lam * x - fv);
  }
  return best;
}

// Composite Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, long n = 20000) {
  if (n % 2) ++n;
  double h = (b - a) / static_cast<double>(n);
  double acc = f(a) + f(b);
  for (long k = 1; k < n; ++k)
    acc += f(a + h * static_cast<double>(k)) * (k % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

struct McIntegral {
  double value = 0.0;
  double se = 0.0;
};

// Plain Monte Carlo integral of f over [-B, B] with uniform draws.
inline McIntegral mc_integral(const std::function<double(double)>& f,
                              double B, long n, uint64_t seed) {
  masim::CounterRng rng(seed, 0);
  double sum = 0.0, sum2 = 0.0;
  for (long k = 0; k < n; ++k) {
    double x = (2.0 * rng.uniform(k) - 1.0) * B;
    double v = f(x) * 2.0 * B;
    sum += v;
    sum2 += v * v;
  }
  McIntegral out;
  out.value = sum / static_cast<double>(n);
  double var =
      (sum2 / static_cast<double>(n) - out.value * out.value) /
      static_cast<double>(n);
  out.se = std::sqrt(std::max(var, 0.0));
  return out;
}

// Direct summation of scale * k^(-alpha) log(k+e)^delta, k = 1..n.
inline double direct_psi_prefix(double alpha, double scale, double delta,
                                long n) {
  double acc = 0.0;
  for (long k = 1; k <= n; ++k) {
    double t = scale * std::pow(static_cast<double>(k), -alpha);
    if (delta != 0.0)
      t *= std::pow(std::log(static_cast<double>(k) + std::numbers::e), delta);
    acc += t;
  }
  return acc;
}

// Direct window sum of coefficients via phi lookups.
inline double direct_partial_sum(const masim::CoefficientFamily& fam, long i,
                                 long n) {
  double acc = 0.0;
  for (long k = i + 1; k <= i + n; ++k) acc += fam.phi(k);
  return acc;
}

}  // namespace oracles
