#include "masim/ruin.hpp"

#include <algorithm>
#include <cmath>

#include "masim/optimize.hpp"
#include "masim/ratefn.hpp"

namespace masim {

namespace {

// Exact finite-window value of (1/n) sum_i Lambda(t phi_{i,n}) plus a sound
// slack for the dropped positive terms: Lambda is nonnegative, and on the
// tail every window sum is bounded by the coefficient tail mass.
std::pair<double, double> mgf_window_mean(const CoefficientFamily& fam,
                                          const InnovationModel& model,
                                          double t, long n) {
  double value =
      finite_n_mgf_sum(fam, model, RegimeSpec::s2(), t, n, -1, Exec::Serial);
  double slack = 0.0;
  if (fam.kind() != FamilyKind::FiniteLag) {
    double tail = fam.abs_tail(n * n - n);
    slack = model.log_mgf(t * tail) + model.log_mgf(-t * tail);
  }
  return {value, slack};
}

struct HitScan {
  char hit = 0;
  long time = 0;
  double weight = 0.0;  // likelihood-ratio weight (1 for plain MC)
};

std::array<double, 3> hit_quantiles(std::vector<long>& times) {
  std::array<double, 3> q{0.0, 0.0, 0.0};
  if (times.empty()) return q;
  std::sort(times.begin(), times.end());
  auto at = [&](double p) {
    size_t idx = static_cast<size_t>(p * (times.size() - 1));
    return static_cast<double>(times[idx]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

// Largest certified drift margin for short memory with nonnegative
// normalized coefficients: g(t) = Lambda(t) - t mu bounds every g_n from
// above because sum_i phi_{i,n} = n and Lambda(t phi) <= phi Lambda(t).
bool nonneg_normalized(const CoefficientFamily& fam) {
  if (fam.memory() == Memory::Long) return false;
  if (std::abs(fam.sum() - 1.0) > 1e-9) return false;
  if (fam.kind() != FamilyKind::FiniteLag) return true;  // positive kinds
  for (const auto& [i, v] : fam.taps())
    if (v < 0.0) return false;
  return true;
}

// Chernoff bound on P[hit after N] for linear-a short-memory problems:
// min over certified t of exp(-t u level) e^{(N+1) g(t)} / (1 - e^{g(t)}).
double tail_bound_short_linear(const RuinProblem& prob, double u, long N,
                               bool* certified) {
  const double level = prob.set.level();
  auto g = [&](double t) { return prob.model.log_mgf(t) - t * prob.mu; };
  auto bound_at = [&](double t) {
    double gv = g(t);
    if (!(gv < -1e-12) || gv == -kInf) return kInf;
    double log_b = -t * u * level + (static_cast<double>(N) + 1.0) * gv -
                   std::log1p(-std::exp(gv));
    return std::exp(std::min(log_b, 0.0));
  };
  MinResult m = log_grid_minimize(bound_at, 1e-4, 1e4, 64, 1e-10);
  if (m.value == kInf) {
    *certified = false;
    return 1.0;
  }
  *certified = nonneg_normalized(prob.fam);
  return std::min(m.value, 1.0);
}

// Long-memory Gaussian horizon bound: P[S_k - a_k mu > u level] <=
// exp(-(u level + a_k mu)^2 / (2 sigma^2 k Psi_k^2 Q)), where Q bounds
// (1/k) sum_i (phi_{i,k}/Psi_k)^2 past the horizon. Q is certified from two
// finite-n evaluations; the monotone continuation is asymptotic, so the
// bound is reported uncertified.
double tail_bound_long_gaussian(const RuinProblem& prob, double u, long N) {
  const double level = prob.set.level();
  const double s2 = prob.model.variance();
  const CoefficientFamily& fam = prob.fam;
  auto Q_at = [&](long k) {
    double v = finite_n_mgf_sum(fam, InnovationModel::gaussian1(1.0),
                                RegimeSpec::r2(fam), 1.0, k, -1, Exec::Serial);
    return 2.0 * v;  // (1/k) sum (phi/Psi)^2
  };
  double Q = std::max(Q_at(N), Q_at(2 * N)) * 1.05;
  auto log_term = [&](long k) {
    double ak = prob.reg.a(k);
    double psik = fam.psi_prefix(k);
    double z = u * level + ak * prob.mu;
    return -z * z / (2.0 * s2 * static_cast<double>(k) * psik * psik * Q);
  };
  // Dyadic accumulation: within [a, 2a) the exponent is monotone enough to
  // be bounded by its block maximum at the endpoints.
  double total = 0.0;
  long a = N + 1;
  for (int j = 0; j < 200; ++j) {
    long b = 2 * a;
    double lt = std::max(log_term(a), std::max(log_term((a + b) / 2),
                                               log_term(b)));
    double block = static_cast<double>(b - a) * std::exp(std::min(lt, 0.0));
    total += block;
    if (block < 1e-16 * (total + 1e-300) || total > 1.0) break;
    a = b;
  }
  return std::min(total, 1.0);
}

void attach_tail_bound(const RuinProblem& prob, double u, long N,
                       RuinEstimate& est) {
  const bool linear_a =
      prob.reg.tag() == Regime::S1 || prob.reg.tag() == Regime::S2;
  if (linear_a) {
    bool cert = false;
    est.tail_bound = tail_bound_short_linear(prob, u, N, &cert);
    est.tail_certified = cert;
    if (!cert) est.notes += " tail bound heuristic (family not certified);";
    return;
  }
  if (prob.fam.memory() == Memory::Long &&
      prob.model.law() == Law::Gaussian) {
    est.tail_bound = tail_bound_long_gaussian(prob, u, N);
    est.tail_certified = false;
    est.notes += " tail bound from asymptotic variance envelope;";
    return;
  }
  est.tail_bound = 1.0;
  est.tail_certified = false;
  est.notes += " no horizon tail bound available for this regime;";
}

// A tilt with strictly negative limiting drift exponent must exist, or the
// ruin probability could be 1 and the estimate is refused.
void require_drift_certificate(const RuinProblem& prob) {
  if (!prob.set.condition_a(prob.mu).holds)
    throw NoDriftCertificate("target set fails Condition A for this drift");
  if (prob.fam.memory() == Memory::Short) {
    auto g = [&](double t) { return prob.model.log_mgf(t) - t * prob.mu; };
    for (double t = 1e-3; t < 1e4; t *= 2.0)
      if (g(t) < -1e-12) return;
    throw NoDriftCertificate("no tilt with Lambda(t) < t mu found");
  }
  MemoryKernel kern(prob.fam.alpha(), prob.fam.p());
  for (double t = 1e-3; t < 1e4; t *= 2.0) {
    double la = prob.model.law() == Law::Gaussian
                    ? 0.5 * kernel_integral(kern, 2.0) *
                          prob.model.variance() * t * t
                    : deformed_log_mgf(prob.model, kern, t);
    if (la - t * prob.mu < -1e-12) return;
  }
  throw NoDriftCertificate("no tilt with Lambda_alpha(t) < t mu found");
}

}  // namespace

RuinEstimate ruin_mc(const RuinProblem& prob, double u, long n_paths,
                     int horizon_multiplier, uint64_t seed, Exec exec) {
  if (!(u > 0.0)) throw InvalidParameter("ruin_mc: u must be > 0");
  if (horizon_multiplier < 2)
    throw InvalidParameter("ruin_mc: horizon multiplier must be >= 2");
  if (prob.set.dim() != 1)
    throw UnsupportedDimension("ruin estimation is univariate");
  require_drift_certificate(prob);

  const long N = horizon_multiplier * prob.reg.a_inverse(u);
  const double level = prob.set.level();
  const bool closed = prob.set.is_closed();
  std::vector<double> a_vals(static_cast<size_t>(N) + 1, 0.0);
  for (long n = 1; n <= N; ++n)
    a_vals[static_cast<size_t>(n)] = prob.reg.a(n);

  std::vector<HitScan> scans(static_cast<size_t>(n_paths));
  auto run_one = [&](long k) {
    PathConfig c{prob.fam, prob.model, N,     0,
                 seed,     static_cast<uint64_t>(k), prob.reg.tag(), prob.mu};
    Path p = sample_path(c);
    HitScan hs;
    for (long n = 1; n <= N; ++n) {
      double y = p.s[static_cast<size_t>(n)] -
                 a_vals[static_cast<size_t>(n)] * prob.mu;
      bool in = closed ? y >= u * level : y > u * level;
      if (in) {
        hs.hit = 1;
        hs.time = n;
        hs.weight = 1.0;
        break;
      }
    }
    scans[static_cast<size_t>(k)] = hs;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long k = 0; k < n_paths; ++k) run_one(k);
  } else {
    for (long k = 0; k < n_paths; ++k) run_one(k);
  }

  long hits = 0;
  std::vector<long> times;
  for (long k = 0; k < n_paths; ++k) {
    if (scans[static_cast<size_t>(k)].hit) {
      ++hits;
      times.push_back(scans[static_cast<size_t>(k)].time);
    }
  }
  RuinEstimate est;
  est.u = u;
  est.method = RuinMethod::Plain;
  est.horizon = N;
  est.seed = seed;
  est.n_paths = n_paths;
  est.n_hits = hits;
  est.rho_hat = static_cast<double>(hits) / static_cast<double>(n_paths);
  est.se = std::sqrt(std::max(est.rho_hat * (1.0 - est.rho_hat), 0.0) /
                     static_cast<double>(n_paths));
  est.hit_time_quantiles = hit_quantiles(times);
  attach_tail_bound(prob, u, N, est);
  return est;
}

RuinEstimate ruin_is(const RuinProblem& prob, double u, long n_paths,
                     uint64_t seed, Exec exec, int horizon_multiplier) {
  if (!(u > 0.0)) throw InvalidParameter("ruin_is: u must be > 0");
  if (prob.set.dim() != 1)
    throw UnsupportedDimension("ruin estimation is univariate");
  if (prob.fam.kind() != FamilyKind::FiniteLag)
    throw UnsupportedFamily("tilted estimation needs a finite-lag family");

  // Tilt at the positive root of Lambda(theta) = theta mu. A degenerate
  // drift (mu on the boundary) surfaces as the unbracketable root; a valid
  // drift whose root is merely out of reach falls back to plain MC.
  double theta = 0.0;
  auto g = [&](double t) { return prob.model.log_mgf(t) - t * prob.mu; };
  try {
    theta = expand_and_bisect_root(
        [&](double t) { return g(t) + 1e-13; }, 1e-3, 1e9, 1e-13);
  } catch (const RootNotBracketed&) {
    if (!(prob.mu > 0.0) || !prob.set.condition_a(prob.mu).holds) throw;
    RuinEstimate est = ruin_mc(prob, u, n_paths, 20, seed, exec);
    est.notes += " tilt root not bracketed; fell back to plain MC;";
    return est;
  }
  require_drift_certificate(prob);

  const long N = horizon_multiplier * prob.reg.a_inverse(u);
  const double level = prob.set.level();
  const bool closed = prob.set.is_closed();
  const double lam_theta = prob.model.log_mgf(theta);

  long i_min = prob.fam.min_support(), i_max = prob.fam.max_support();
  std::vector<std::pair<long, double>> taps = prob.fam.taps();

  std::vector<HitScan> scans(static_cast<size_t>(n_paths));
  auto run_one = [&](long k) {
    CounterRng rng(seed, static_cast<uint64_t>(k));
    const long j_lo = 1 - i_max;
    std::vector<double> z;  // z[j - j_lo]
    z.reserve(256);
    double llr = 0.0;
    long j_next = j_lo;
    double s = 0.0;
    HitScan hs;
    for (long n = 1; n <= N; ++n) {
      long j_need = n - i_min;
      for (; j_next <= j_need; ++j_next) {
        double zj = prob.model.sample_tilted(rng, j_next, theta);
        z.push_back(zj);
        llr += theta * zj - lam_theta;
      }
      double x = 0.0;
      for (const auto& [i, v] : taps)
        x += v * z[static_cast<size_t>(n - i - j_lo)];
      s += x;
      double y = s - prob.reg.a(n) * prob.mu;
      bool in = closed ? y >= u * level : y > u * level;
      if (in) {
        hs.hit = 1;
        hs.time = n;
        hs.weight = std::exp(-llr);
        break;
      }
    }
    scans[static_cast<size_t>(k)] = hs;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long k = 0; k < n_paths; ++k) run_one(k);
  } else {
    for (long k = 0; k < n_paths; ++k) run_one(k);
  }

  double sum_w = 0.0, sum_w2 = 0.0;
  long hits = 0;
  std::vector<long> times;
  for (long k = 0; k < n_paths; ++k) {
    const HitScan& hs = scans[static_cast<size_t>(k)];
    sum_w += hs.weight;
    sum_w2 += hs.weight * hs.weight;
    if (hs.hit) {
      ++hits;
      times.push_back(hs.time);
    }
  }
  RuinEstimate est;
  est.u = u;
  est.method = RuinMethod::Tilted;
  est.horizon = N;
  est.seed = seed;
  est.n_paths = n_paths;
  est.n_hits = hits;
  est.rho_hat = sum_w / static_cast<double>(n_paths);
  double var = (sum_w2 / static_cast<double>(n_paths) -
                est.rho_hat * est.rho_hat) /
               static_cast<double>(n_paths - 1);
  est.se = std::sqrt(std::max(var, 0.0));
  est.hit_time_quantiles = hit_quantiles(times);
  attach_tail_bound(prob, u, N, est);
  est.notes += " theta* = " + std::to_string(theta) + ";";
  return est;
}

GEvaluation empirical_g(const RuinProblem& prob, double t,
                        const std::vector<long>& n_grid) {
  if (prob.set.dim() != 1)
    throw UnsupportedDimension("empirical g is univariate");
  GEvaluation out;
  double slack = 0.0;
  for (long n : n_grid) {
    auto [v, sl] = mgf_window_mean(prob.fam, prob.model, t, n);
    if (v == kInf) throw DivergentTerm("g_n infinite at t");
    out.values.emplace_back(n, v - t * prob.mu);
    slack = std::max(slack, sl);
  }
  out.slack = slack;
  // Richardson extrapolation from the two largest grid points.
  if (out.values.size() >= 2) {
    auto [n1, g1] = out.values[out.values.size() - 2];
    auto [n2, g2] = out.values.back();
    out.g = (static_cast<double>(n2) * g2 - static_cast<double>(n1) * g1) /
            static_cast<double>(n2 - n1);
  } else {
    out.g = out.values.back().second;
  }
  // Central-difference derivative of the extrapolated g.
  double h = 1e-5 * (1.0 + std::abs(t));
  auto g_of = [&](double tt) {
    long n1 = out.values.size() >= 2 ? out.values[out.values.size() - 2].first
                                     : n_grid.back();
    long n2 = n_grid.back();
    auto [a, s1] = mgf_window_mean(prob.fam, prob.model, tt, n1);
    auto [b, s2] = mgf_window_mean(prob.fam, prob.model, tt, n2);
    (void)s1;
    (void)s2;
    double ga = a - tt * prob.mu, gb = b - tt * prob.mu;
    if (n1 == n2) return gb;
    return (static_cast<double>(n2) * gb - static_cast<double>(n1) * ga) /
           static_cast<double>(n2 - n1);
  };
  out.dg = (g_of(t + h) - g_of(t - h)) / (2.0 * h);
  return out;
}

DecayFit ruin_decay_fit(const std::vector<RuinEstimate>& estimates,
                        const RegimeSpec& reg, double theory_lower,
                        double theory_upper, double regressor_power,
                        double max_rel_se) {
  std::vector<std::pair<double, double>> pts;  // (regressor, log rho)
  for (const auto& e : estimates) {
    if (!(e.rho_hat > 0.0)) continue;
    if (e.se / e.rho_hat >= max_rel_se) continue;
    double x = std::isfinite(regressor_power)
                   ? std::pow(e.u, regressor_power)
                   : reg.b(reg.a_inverse(e.u));
    pts.emplace_back(x, std::log(e.rho_hat));
  }
  if (pts.size() < 4)
    throw InsufficientData("decay fit needs >= 4 usable grid points");
  std::sort(pts.begin(), pts.end());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  double n = static_cast<double>(pts.size());
  for (auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  DecayFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (auto& [x, y] : pts) {
    double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.theory_lower = theory_lower;
  fit.theory_upper = theory_upper;
  fit.inside = fit.slope >= theory_lower - 1e-12 &&
               fit.slope <= theory_upper + 1e-12;
  fit.n_used = static_cast<long>(pts.size());
  return fit;
}

}  // namespace masim
