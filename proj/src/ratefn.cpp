#include "masim/ratefn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "masim/optimize.hpp"
#include "masim/quadrature.hpp"

namespace masim {

ConjugateResult legendre(const std::function<double(double)>& f, double x,
                         Interval region, double bracket_tol) {
  if (!(region.lo < region.hi)) throw EmptyRegion("legendre region");
  auto h = [&](double lam) {
    double fv = f(lam);
    if (std::isnan(fv) || fv == kInf) return -kInf;
    return lam * x - fv;
  };
  auto inside = [&](double lam) {
    return lam >= region.lo && lam <= region.hi;
  };

  // Start from a finite point of the region where f is finite.
  double start = 0.0;
  if (!inside(0.0) || h(0.0) == -kInf) {
    double lo = std::isfinite(region.lo) ? region.lo : -1.0;
    double hi = std::isfinite(region.hi) ? region.hi : 1.0;
    bool found = false;
    for (int k = 0; !found && k <= 400; ++k) {
      double t = k / 400.0;
      for (double s : {lo + t * (hi - lo), hi - t * (hi - lo)}) {
        if (inside(s) && h(s) != -kInf) {
          start = s;
          found = true;
          break;
        }
      }
    }
    if (!found) throw EmptyRegion("no finite point of f inside region");
  }

  // Geometric expansion from `start` in the ascent direction until h drops;
  // concavity makes the probed endpoints a valid bracket.
  const double kHuge = 1e12;
  auto expand = [&](int dir) -> std::pair<double, bool> {
    double step = std::max(1.0, std::abs(start)) * 0.5;
    double cur = start;
    double hcur = h(start);
    for (int it = 0; it < 600; ++it) {
      double nxt = cur + dir * step;
      step *= 1.6;
      nxt = std::clamp(nxt, region.lo, region.hi);
      double hn = h(nxt);
      if (hn < hcur || hn == -kInf) return {nxt, false};
      cur = nxt;
      hcur = hn;
      if (nxt == region.lo || nxt == region.hi) return {nxt, false};
      if (std::abs(nxt) > kHuge) return {nxt, true};
    }
    return {cur, true};
  };

  auto [right, right_unbounded] = expand(+1);
  auto [left, left_unbounded] = expand(-1);

  ConjugateResult r;
  r.maximizer = Eigen::VectorXd::Zero(1);
  if (right_unbounded || left_unbounded) {
    // x lies outside the closure of the gradient range: the sup is +inf.
    r.value = kInf;
    r.maximizer(0) = right_unbounded ? right : left;
    r.converged = false;
    return r;
  }

  auto neg = [&](double lam) {
    double v = h(lam);
    return v == -kInf ? kInf : -v;
  };
  MinResult m = golden_minimize(neg, left, right, bracket_tol);
  r.value = -m.value;
  r.maximizer(0) = m.x;
  r.converged = m.converged;
  r.iterations = m.evaluations;

  // Tie-break toward the smallest-norm maximizer; the value is unaffected.
  if (inside(0.0) && std::abs(m.x) > bracket_tol &&
      h(0.0) >= r.value - 1e-15 * (1.0 + std::abs(r.value)))
    r.maximizer(0) = 0.0;
  return r;
}

ConjugateResult legendre(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, double grad_tol) {
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(d);
  auto residual = [&](const Eigen::VectorXd& l) -> Eigen::VectorXd {
    return grad(l) - x;
  };

  Eigen::VectorXd res = residual(lam);
  int it = 0;
  for (; it < 200; ++it) {
    if (res.norm() <= grad_tol * (1.0 + x.norm())) break;
    // Finite-difference Hessian columns.
    Eigen::MatrixXd J(d, d);
    for (int j = 0; j < d; ++j) {
      double hstep = 1e-6 * (1.0 + lam.norm());
      Eigen::VectorXd lp = lam, lm = lam;
      lp(j) += hstep;
      lm(j) -= hstep;
      if (f(lp) == kInf || f(lm) == kInf) {
        hstep *= 1e-3;
        lp = lam;
        lm = lam;
        lp(j) += hstep;
        lm(j) -= hstep;
      }
      J.col(j) = (grad(lp) - grad(lm)) / (2.0 * hstep);
    }
    Eigen::VectorXd dlam = J.fullPivLu().solve(-res);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd cand = lam + t * dlam;
      if (f(cand) != kInf) {
        Eigen::VectorXd rc = residual(cand);
        if (rc.norm() < res.norm()) {
          lam = cand;
          res = rc;
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  ConjugateResult r;
  r.maximizer = lam;
  r.value = lam.dot(x) - f(lam);
  r.converged = res.norm() <= grad_tol * (1.0 + x.norm());
  r.iterations = it;
  return r;
}

ConjugateResult legendre(const InnovationModel& model,
                         const Eigen::VectorXd& x) {
  if (x.size() == 1) {
    auto f = [&](double t) { return model.log_mgf(t); };
    return legendre(f, x(0));
  }
  auto f = [&](const Eigen::VectorXd& t) { return model.log_mgf(t); };
  auto g = [&](const Eigen::VectorXd& t) { return model.grad_log_mgf(t); };
  return legendre(f, g, x);
}

// ---------------------------------------------------------------------------
// MemoryKernel

MemoryKernel::MemoryKernel(double alpha, double p) : alpha_(alpha), p_(p) {
  if (!(alpha > 0.5 && alpha <= 1.0))
    throw InvalidParameter("MemoryKernel: alpha must be in (1/2, 1]");
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidParameter("MemoryKernel: p must be in [0,1]");
  if (alpha_ == 1.0) {
    sup_g_ = 1.0;
  } else {
    auto neg = [this](double x) { return -g(x); };
    MinResult m = golden_minimize(neg, -1.0, 0.0, 1e-13);
    sup_g_ = std::max({-m.value, g(0.0), g(-1.0)});
  }
}

double MemoryKernel::g(double x) const {
  const double q = 1.0 - p_;
  if (alpha_ == 1.0) return (x > -1.0 && x < 0.0) ? 1.0 : 0.0;
  const double e = 1.0 - alpha_;
  if (x >= 0.0) return p_ * (std::pow(x + 1.0, e) - std::pow(x, e));
  if (x <= -1.0) return q * (std::pow(-x, e) - std::pow(-x - 1.0, e));
  return q * std::pow(-x, e) + p_ * std::pow(x + 1.0, e);
}

double MemoryKernel::sup_g() const { return sup_g_; }

double kernel_integral(const MemoryKernel& kern, double beta) {
  if (!(beta > 1.0))
    throw InvalidParameter("kernel_integral: beta must be > 1");
  if (kern.alpha() == 1.0) return 1.0;
  if (kern.alpha() * beta <= 1.0) return kInf;  // g^beta ~ x^(-alpha beta)

  QuadTol tol{1e-10, 1e-10};
  auto f = [&](double x) { return std::pow(kern.g(x), beta); };
  const double T = 8.0;
  double v = integrate(f, -1.0, 0.0, tol);
  if (kern.p() > 0.0) {
    v += integrate(f, 0.0, T, tol);
    v += integrate_tail(f, T, tol);
  }
  if (kern.p() < 1.0) {
    v += integrate(f, -1.0 - T, -1.0, tol);
    v += integrate_tail([&](double s) { return f(-s); }, 1.0 + T, tol);
  }
  return v;
}

double deformed_transform(const std::function<double(double)>& f,
                          const MemoryKernel& kern, double lambda) {
  if (lambda == 0.0) return 0.0;
  if (kern.alpha() == 1.0) return f(lambda);
  QuadTol tol{1e-10, 1e-10};
  auto h = [&](double x) { return f(lambda * kern.g(x)); };
  const double T = 8.0;
  double v = integrate(h, -1.0, 0.0, tol);
  if (kern.p() > 0.0) {
    v += integrate(h, 0.0, T, tol);
    v += integrate_tail(h, T, tol);
  }
  if (kern.p() < 1.0) {
    v += integrate(h, -1.0 - T, -1.0, tol);
    v += integrate_tail([&](double s) { return h(-s); }, 1.0 + T, tol);
  }
  return v;
}

double deformed_log_mgf(const InnovationModel& model, const MemoryKernel& kern,
                        double lambda) {
  if (model.dim() != 1)
    throw UnsupportedDimension("deformed log-MGF is univariate");
  if (lambda == 0.0) return 0.0;
  if (kern.alpha() == 1.0) return model.log_mgf(lambda);
  // The argument spans lambda * [0, sup g]; an infinite log-MGF inside that
  // range makes the integral infinite.
  if (model.log_mgf(lambda * kern.sup_g()) == kInf) return kInf;
  return deformed_transform([&](double t) { return model.log_mgf(t); }, kern,
                            lambda);
}

double heavy_log_mgf(const HeavyProfile& hp, const Eigen::VectorXd& lambda) {
  double n = lambda.norm();
  if (n == 0.0) return 0.0;
  return hp.zeta(lambda / n) * std::pow(n, hp.beta);
}

double heavy_log_mgf(const InnovationModel& model,
                     const Eigen::VectorXd& lambda) {
  auto hp = model.heavy_profile();
  if (!hp)
    throw MissingHeavyProfile("model's log-MGF has no heavy profile attached");
  return heavy_log_mgf(*hp, lambda);
}

namespace {

// sup_{r>0} { r s - zeta r^beta } along one direction.
double ray_conjugate(double s, double zeta, double beta) {
  if (s <= 0.0) return 0.0;
  if (zeta <= 0.0) return kInf;
  double rhat = std::pow(s / (beta * zeta), 1.0 / (beta - 1.0));
  return rhat * s * (1.0 - 1.0 / beta);
}

}  // namespace

double heavy_conjugate(const HeavyProfile& hp, const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  if (x.norm() == 0.0) return 0.0;
  if (d == 1) {
    Eigen::VectorXd e(1);
    e(0) = x(0) > 0 ? 1.0 : -1.0;
    return ray_conjugate(std::abs(x(0)), hp.zeta(e), hp.beta);
  }
  auto along = [&](const Eigen::VectorXd& u) {
    return ray_conjugate(u.dot(x), hp.zeta(u), hp.beta);
  };
  if (d == 2) {
    auto neg = [&](double th) {
      Eigen::VectorXd u(2);
      u << std::cos(th), std::sin(th);
      return -along(u);
    };
    double best = -kInf, bth = 0.0;
    const int N = 1440;
    for (int k = 0; k < N; ++k) {
      double th = 2.0 * std::numbers::pi * k / N;
      double v = -neg(th);
      if (v > best) {
        best = v;
        bth = th;
      }
    }
    MinResult g = golden_minimize(neg, bth - 2.0 * std::numbers::pi / N,
                                  bth + 2.0 * std::numbers::pi / N, 1e-12);
    return std::max(best, -g.value);
  }
  if (d == 3) {
    double best = -kInf;
    double bphi = 0.0, bth = 0.0;
    const int N = 128;
    for (int a = 0; a < N; ++a) {
      for (int b = 0; b <= N / 2; ++b) {
        double phi = 2.0 * std::numbers::pi * a / N;
        double th = std::numbers::pi * b / (N / 2);
        Eigen::VectorXd u(3);
        u << std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi),
            std::cos(th);
        double v = along(u);
        if (v > best) {
          best = v;
          bphi = phi;
          bth = th;
        }
      }
    }
    // One round of coordinate golden refinement on the angles.
    auto val = [&](double phi, double th) {
      Eigen::VectorXd u(3);
      u << std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi),
          std::cos(th);
      return along(u);
    };
    double w = 2.0 * std::numbers::pi / N;
    for (int round = 0; round < 3; ++round) {
      MinResult m1 = golden_minimize(
          [&](double phi) { return -val(phi, bth); }, bphi - w, bphi + w,
          1e-12);
      bphi = m1.x;
      MinResult m2 = golden_minimize(
          [&](double th) { return -val(bphi, th); }, bth - w, bth + w, 1e-12);
      bth = m2.x;
      best = std::max(best, val(bphi, bth));
      w *= 0.25;
    }
    return best;
  }
  throw UnsupportedDimension("heavy conjugate implemented for d <= 3");
}

// ---------------------------------------------------------------------------
// Tilt region

namespace {

TiltRegion pi_region_short(const CoefficientFamily& fam,
                           const InnovationModel& model, long n_max) {
  TiltRegion out;
  Interval dom = model.mgf_domain();
  if (dom.whole_line()) {
    out.decided = true;
    out.lambda_max = kInf;
    out.lambda_min = -kInf;
    return out;
  }
  CoefficientFamily::WindowRange wr = fam.window_range(n_max);

  auto upper_for = [&](double hi_w, double lo_w) {
    double cap = kInf;
    if (hi_w > 0.0 && dom.hi < kInf) cap = std::min(cap, dom.hi / hi_w);
    if (lo_w < 0.0 && dom.lo > -kInf) cap = std::min(cap, dom.lo / lo_w);
    return cap;
  };
  auto lower_for = [&](double hi_w, double lo_w) {
    double cap = -kInf;
    if (hi_w > 0.0 && dom.lo > -kInf) cap = std::max(cap, dom.lo / hi_w);
    if (lo_w < 0.0 && dom.hi < kInf) cap = std::max(cap, dom.hi / lo_w);
    return cap;
  };

  // Certified-inside cap from the sound window bounds, certified-outside cap
  // from window values that are actually achieved at arbitrarily large n.
  double in_hi = upper_for(wr.hi_certified, wr.lo_certified);
  double out_hi = upper_for(wr.hi, wr.lo);
  double in_lo = lower_for(wr.hi_certified, wr.lo_certified);
  double out_lo = lower_for(wr.hi, wr.lo);

  out.lambda_max = in_hi;
  out.lambda_min = in_lo;
  double gap_hi = (std::isfinite(out_hi) || std::isfinite(in_hi))
                      ? out_hi - in_hi
                      : 0.0;
  double gap_lo = (std::isfinite(out_lo) || std::isfinite(in_lo))
                      ? in_lo - out_lo
                      : 0.0;
  out.margin = std::max({gap_hi, gap_lo, 0.0});
  double scale = 1.0 + std::min(std::abs(in_hi), 1e300) +
                 std::min(std::abs(in_lo), 1e300);
  out.decided = out.margin <= 1e-6 * scale;
  if (!out.decided)
    out.reason = "window scan to n_max left a certification gap";
  return out;
}

TiltRegion pi_region_long(const CoefficientFamily& fam,
                          const InnovationModel& model, long n_max) {
  TiltRegion out;
  Interval dom = model.mgf_domain();
  double p = fam.p(), q = 1.0 - fam.p();
  if (dom.whole_line()) {
    out.decided = true;
    out.lambda_max = kInf;
    out.lambda_min = -kInf;
    return out;
  }
  if (!dom.contains(0.0)) {
    out.decided = true;
    out.reason = "0 not interior to the log-MGF domain";
    return out;
  }

  // Observed sup of phi_{i,n}/Psi_n. For fixed n the window value is
  // unimodal in the position i, so ternary search finds the peak.
  double s_obs = 0.0;
  for (long n = 1; n <= n_max; n = std::max(n + 1, n + n / 8)) {
    long lo = -n, hi = 0;
    while (hi - lo > 2) {
      long m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (fam.partial_sum(m1, n) < fam.partial_sum(m2, n))
        lo = m1 + 1;
      else
        hi = m2 - 1;
    }
    double best = 0.0;
    for (long i = lo - 2; i <= hi + 2; ++i)
      best = std::max(best, fam.partial_sum(i, n));
    s_obs = std::max(s_obs, best / fam.psi_prefix(n));
  }

  // Regular-variation limit of that sup: a window splitting its length
  // theta/(1-theta) across the origin approaches p(1-t)^(1-a) + q t^(1-a).
  double s_lim;
  double alpha = fam.alpha();
  if (alpha == 1.0) {
    s_lim = 1.0;
  } else {
    auto split = [&](double t) {
      return -(p * std::pow(1.0 - t, 1.0 - alpha) +
               q * std::pow(t, 1.0 - alpha));
    };
    MinResult m = golden_minimize(split, 0.0, 1.0, 1e-13);
    s_lim = std::max({-m.value, p, q});
  }

  double s_cert = std::max(s_obs, s_lim);
  double cap = kInf, cap_lo = -kInf;
  if (dom.hi < kInf && s_cert > 0.0) cap = dom.hi / s_cert;
  if (dom.lo > -kInf && s_cert > 0.0) cap_lo = dom.lo / s_cert;
  double pq = std::min(p, q);
  if (pq > 0.0) {
    if (dom.hi < kInf) cap = std::min(cap, dom.hi / pq);
    if (dom.lo > -kInf) cap_lo = std::max(cap_lo, dom.lo / pq);
  }
  out.lambda_max = cap;
  out.lambda_min = cap_lo;
  out.margin = std::abs(s_lim - s_obs) / std::max(s_cert, 1e-12) *
               (std::isfinite(cap) ? std::abs(cap) : 1.0);
  out.decided = out.margin <= 1e-3 * (1.0 + std::abs(cap));
  if (!out.decided)
    out.reason = "regular-variation envelope not converged at n_max";
  return out;
}

}  // namespace

TiltRegion pi_region(const CoefficientFamily& fam,
                     const InnovationModel& model, const RegimeSpec& reg,
                     long n_max) {
  if (model.dim() != 1)
    throw UnsupportedDimension("tilt region is implemented for d = 1");
  if (reg.long_memory()) return pi_region_long(fam, model, n_max);
  return pi_region_short(fam, model, n_max);
}

// ---------------------------------------------------------------------------
// Finite-n normalized log-MGF sums

double finite_n_mgf_sum(const CoefficientFamily& fam,
                        const InnovationModel& model, const RegimeSpec& reg,
                        double lambda, long n, long k_n, Exec exec) {
  if (n < 1) throw InvalidParameter("finite_n_mgf_sum: n must be >= 1");
  if (model.dim() != 1)
    throw UnsupportedDimension("finite_n_mgf_sum is univariate");
  if (k_n < 0) k_n = n * n;

  const double w = reg.b(n) / reg.a(n) * lambda;

  // Windows wholly outside the coefficient support contribute Lambda(0) = 0.
  long i_lo = -k_n, i_hi = k_n;
  if (fam.kind() == FamilyKind::FiniteLag) {
    i_lo = std::max(i_lo, fam.min_support() - n);
    i_hi = std::min(i_hi, fam.max_support() - 1);
  } else if (fam.kind() == FamilyKind::Geometric ||
             fam.kind() == FamilyKind::PowerSummable) {
    i_lo = std::max(i_lo, -n);
  }
  if (i_hi < i_lo) return 0.0;

  const long span = i_hi - i_lo + 1;
  const long chunk = 1L << 20;
  const long n_chunks = (span + chunk - 1) / chunk;
  std::vector<double> partial(static_cast<size_t>(n_chunks), 0.0);
  std::vector<char> divergent(static_cast<size_t>(n_chunks), 0);

  auto run_chunk = [&](long ci) {
    long a = i_lo + ci * chunk;
    long b = std::min(i_hi, a + chunk - 1);
    double acc = 0.0;
    // Anchored at the chunk head, then advanced by the exact recurrence
    // phi_{i+1,n} = phi_{i,n} - phi_{i+1} + phi_{i+n+1}.
    double ps = fam.partial_sum(a, n);
    for (long i = a;; ++i) {
      double v = model.log_mgf(w * ps);
      if (v == kInf) {
        divergent[static_cast<size_t>(ci)] = 1;
        return;
      }
      acc += v;
      if (i == b) break;
      ps += fam.phi(i + n + 1) - fam.phi(i + 1);
    }
    partial[static_cast<size_t>(ci)] = acc;
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  } else {
    for (long ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  }

  for (long ci = 0; ci < n_chunks; ++ci)
    if (divergent[static_cast<size_t>(ci)])
      throw DivergentTerm("finite_n_mgf_sum: infinite summand at lambda " +
                          std::to_string(lambda));
  double total = 0.0;
  for (long ci = 0; ci < n_chunks; ++ci)
    total += partial[static_cast<size_t>(ci)];
  return total / reg.b(n);
}

}  // namespace masim
