#include "masim/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace masim {

MinResult golden_minimize(const std::function<double(double)>& f, double lo,
                          double hi, double tol, int max_iter) {
  if (!(lo <= hi)) throw InvalidParameter("golden_minimize: lo > hi");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  int it = 0;
  for (; it < max_iter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b));
       ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  double xm = 0.5 * (a + b);
  double fm = f(xm);
  ++evals;
  MinResult r;
  r.x = xm;
  r.value = fm;
  if (fc < r.value) r.x = c, r.value = fc;
  if (fd < r.value) r.x = d, r.value = fd;
  r.converged = it < max_iter;
  r.evaluations = evals;
  return r;
}

MinResult log_grid_minimize(const std::function<double(double)>& f, double lo,
                            double hi, int points_per_decade, double tol) {
  if (!(lo > 0.0 && hi > lo))
    throw InvalidParameter("log_grid_minimize: need 0 < lo < hi");
  const double llo = std::log10(lo), lhi = std::log10(hi);
  const int n = std::max(2, static_cast<int>((lhi - llo) * points_per_decade));
  std::vector<double> xs(n + 1), fs(n + 1);
  int best = 0;
  for (int i = 0; i <= n; ++i) {
    xs[i] = std::pow(10.0, llo + (lhi - llo) * i / n);
    fs[i] = f(xs[i]);
    if (fs[i] < fs[best]) best = i;
  }
  double a = xs[std::max(0, best - 1)];
  double b = xs[std::min(n, best + 1)];
  MinResult r = golden_minimize(f, a, b, tol);
  r.evaluations += n + 1;
  if (fs[best] < r.value) {
    r.x = xs[best];
    r.value = fs[best];
  }
  return r;
}

double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double tol, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0))
    throw RootNotBracketed("bisect_root: same sign at " + std::to_string(lo) +
                           " and " + std::to_string(hi));
  for (int i = 0; i < max_iter; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0 || (hi - lo) < tol * (1.0 + std::abs(mid))) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double expand_and_bisect_root(const std::function<double(double)>& f,
                              double step, double limit, double tol) {
  // +inf values count as positive: a convex function jumping to +inf at the
  // edge of its domain still brackets its root.
  auto fs = [&](double x) {
    double v = f(x);
    if (std::isnan(v)) return kInf;
    return v;
  };
  double lo = 0.0;
  double hi = step;
  while (hi <= limit) {
    double fh = fs(hi);
    if (fh > 0.0) return bisect_root(fs, lo, hi, tol);
    lo = hi;
    hi *= 2.0;
  }
  throw RootNotBracketed("no sign change up to " + std::to_string(limit));
}

}  // namespace masim
