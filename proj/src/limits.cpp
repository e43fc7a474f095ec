#include "masim/limits.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "masim/optimize.hpp"

namespace masim {

namespace {

constexpr double kStrict = 1e-9;  // margin for strict set membership

// Directional log-MGF s -> Lambda(s v).
std::function<double(double)> directional_mgf(const InnovationModel& model,
                                              const Eigen::VectorXd& v) {
  if (v.size() == 1) {
    double v0 = v(0);
    return [&model, v0](double s) { return model.log_mgf(s * v0); };
  }
  return [&model, v](double s) {
    return model.log_mgf(Eigen::VectorXd(s * v));
  };
}

// Orthonormal basis of the hyperplane v-perp.
std::vector<Eigen::VectorXd> perp_basis(const Eigen::VectorXd& v) {
  const int d = static_cast<int>(v.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d) -
                      v * v.transpose() / v.squaredNorm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU);
  std::vector<Eigen::VectorXd> basis;
  for (int j = 0; j < d; ++j)
    if (svd.singularValues()(j) > 0.5) basis.push_back(svd.matrixU().col(j));
  return basis;
}

// inf over the closed boundary slice {gamma : v.gamma = level} (extended to
// the full half-space when the unconstrained minimum lies inside) of a
// convex function of mu + c gamma. Used for the heavy-profile inner infima.
double half_space_inner_inf(
    const std::function<double(const Eigen::VectorXd&)>& F,
    const Eigen::VectorXd& mu, const TargetSet& set, double c) {
  const Eigen::VectorXd& v = set.direction();
  const int d = static_cast<int>(v.size());
  // Unconstrained minimum of F(mu + c gamma) over gamma is gamma = -mu/c
  // (the conjugates vanish at 0); inside A the infimum is 0.
  Eigen::VectorXd gmin = -mu / c;
  if (v.dot(gmin) >= set.level()) return 0.0;
  // Otherwise the infimum over the half-space is attained on the boundary.
  Eigen::VectorXd g0 = set.level() * v / v.squaredNorm();
  if (d == 1) return F(mu + c * g0);
  auto basis = perp_basis(v);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(d);
  auto val = [&](const Eigen::VectorXd& off) {
    return F(mu + c * (g0 + off));
  };
  double cur = val(offset);
  for (int round = 0; round < 8; ++round) {
    for (const auto& w : basis) {
      MinResult m = golden_minimize(
          [&](double s) { return val(offset + s * w); }, -64.0, 64.0, 1e-11);
      offset += m.x * w;
      cur = std::min(cur, m.value);
    }
  }
  return cur;
}

// inf over gamma in the half-space of (mu + c gamma)' Sigma^{-1} (mu + c
// gamma) / 2 in closed form.
double quad_inner_inf(const Eigen::MatrixXd& sigma_inv,
                      const Eigen::VectorXd& v, double vSv,
                      const Eigen::VectorXd& mu, double level, double c) {
  (void)sigma_inv;
  double s = v.dot(mu) + c * level;
  if (s <= 0.0) return 0.0;
  return 0.5 * s * s / vSv;
}

void attach_exact(RuinAsymptote& r, double value,
                  std::optional<double> upper_sharp = std::nullopt) {
  // The explicit limit is reported only when the optimizer-based bounds
  // pinch. The upper bound is compared before its conservative strictness
  // margin when the caller supplies the sharp boundary value.
  double up = upper_sharp.value_or(r.upper);
  double scale = 1.0 + std::abs(value);
  if (std::abs(r.lower - up) <= 1e-9 * scale &&
      std::abs(value - up) <= 1e-7 * scale) {
    r.exact = value;
  } else {
    r.notes += " explicit-form value " + std::to_string(value) +
               " not attached (bounds did not pinch);";
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Long strange segment rate bounds

RateBounds segment_rate_bounds(const CoefficientFamily& fam,
                               const InnovationModel& model,
                               const RegimeSpec& reg, const TargetSet& set) {
  const Regime tag = reg.tag();
  RateBounds out;
  out.tag = tag;
  const Eigen::VectorXd v = set.direction();
  const double level = set.level();

  const bool restricted = (tag == Regime::S1 || tag == Regime::R1);
  if (restricted && set.dim() != 1)
    throw UnsupportedDimension(
        "S1/R1 segment bounds implemented for d = 1 half-lines");

  // Directional base transform Phi(kappa) = f(kappa v) for the regime's rate
  // function f; inf over half-spaces then reduces to scalar conjugates.
  std::function<double(double)> phi;
  MemoryKernel kern(fam.memory() == Memory::Long ? fam.alpha() : 1.0,
                    fam.memory() == Memory::Long ? fam.p() : 1.0);
  switch (tag) {
    case Regime::S1:
    case Regime::S2:
      phi = directional_mgf(model, v);
      break;
    case Regime::S3: {
      Eigen::MatrixXd sigma = model.covariance();
      double vSv = v.dot(sigma * v);
      phi = [vSv](double k) { return 0.5 * k * k * vSv; };
      break;
    }
    case Regime::S4: {
      auto hp = model.heavy_profile();
      if (!hp) throw MissingHeavyProfile("S4 segment bounds");
      HeavyProfile h = *hp;
      Eigen::VectorXd vv = v;
      phi = [h, vv](double k) {
        return heavy_log_mgf(h, Eigen::VectorXd(k * vv));
      };
      break;
    }
    case Regime::R1:
    case Regime::R2: {
      if (set.dim() != 1)
        throw UnsupportedDimension("deformed transform is univariate");
      double v0 = v(0);
      phi = [&model, kern, v0](double k) {
        return deformed_log_mgf(model, kern, k * v0);
      };
      break;
    }
    case Regime::R3: {
      double C = kernel_integral(kern, 2.0);
      Eigen::MatrixXd sigma = model.covariance();
      double vSv = v.dot(sigma * v);
      phi = [C, vSv](double k) { return C * 0.5 * k * k * vSv; };
      break;
    }
    case Regime::R4: {
      auto hp = model.heavy_profile();
      if (!hp) throw MissingHeavyProfile("R4 segment bounds");
      double C = kernel_integral(kern, hp->beta);
      HeavyProfile h = *hp;
      Eigen::VectorXd vv = v;
      phi = [C, h, vv](double k) {
        return C * heavy_log_mgf(h, Eigen::VectorXd(k * vv));
      };
      break;
    }
  }

  auto rate_at = [&](double threshold) {
    if (threshold <= 0.0) return 0.0;  // the mean lies in the closure
    return legendre(phi, threshold).value;
  };

  if (!restricted) {
    out.lower = rate_at(level);
    out.upper = rate_at(level);
    return out;
  }

  // S1/R1: the upper rate function is the tilt-restricted conjugate and I^*
  // runs over the feasible shrinkages Theta.
  TiltRegion pi = pi_region(fam, model, reg);
  if (!pi.decided) throw UndecidablePi(pi.reason);
  out.lambda_star = pi.lambda_max;

  Interval region{pi.lambda_min, pi.lambda_max};
  out.lower =
      level <= 0.0 ? 0.0 : legendre(phi, level, region).value;  // inf I_u

  auto h = [&](double eta) { return rate_at(level + eta); };
  if (pi.lambda_max == kInf) {
    out.upper = rate_at(level);
    out.theta_threshold = 0.0;
  } else if (!(pi.lambda_max > 0.0)) {
    out.upper = kInf;
    out.notes = "empty tilt region; no feasible shrinkage";
  } else {
    double ls = pi.lambda_max;
    auto q = [&](double eta) { return eta * ls - h(eta); };  // concave
    // Find any feasible eta (q > 0); the smallest one gives I^*.
    MinResult peak = log_grid_minimize([&](double e) { return -q(e); }, 1e-8,
                                       1e6, 32, 1e-12);
    if (-peak.value <= 0.0) {
      out.upper = kInf;
      out.notes = "Theta empty: eta * lambda* never exceeds the rate";
    } else {
      double hi = peak.x;
      double lo = hi;
      while (lo > 1e-12 && q(lo) > 0.0) lo *= 0.5;
      if (q(lo) > 0.0) {
        // Feasible all the way down: every shrinkage qualifies.
        out.theta_threshold = 0.0;
        out.upper = rate_at(level);
      } else {
        double eta1 = bisect_root(q, lo, hi, 1e-12);
        out.theta_threshold = eta1;
        out.upper = h(eta1);
      }
    }
  }
  if (out.upper < out.lower) {
    // The two optimizers disagree only through tolerance slop.
    out.notes += " upper clipped to lower (tolerance slop);";
    out.upper = out.lower;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables

namespace {
void check_table_args(double omega, double alpha, double beta) {
  if (!(omega >= 0.5)) throw OutOfRange("omega must be >= 1/2");
  if (!(alpha > 0.5 && alpha <= 1.0)) throw OutOfRange("alpha in (1/2, 1]");
  if (omega > 1.0 && !(beta > 1.0))
    throw OutOfRange("beta > 1 required for omega > 1");
}
}  // namespace

double growth_theta(Memory memory, double omega, double alpha, double beta) {
  check_table_args(omega, alpha, beta);
  if (memory == Memory::Short) {
    if (omega <= 1.0) {
      double den = 2.0 * omega - 1.0;
      return den <= 0.0 ? kInf : 1.0 / den;
    }
    return (beta - 1.0) / (beta * omega - 1.0);
  }
  if (omega <= 1.5 - alpha) return kInf;
  if (omega <= 2.0 - alpha) return 1.0 / (2.0 * omega + 2.0 * alpha - 3.0);
  return (beta - 1.0) / (beta * (omega + alpha - 1.0) - 1.0);
}

double decay_theta(Memory memory, double omega, double alpha, double beta) {
  check_table_args(omega, alpha, beta);
  if (memory == Memory::Short) {
    if (omega <= 1.0) return (2.0 * omega - 1.0) / omega;
    return (beta * omega - 1.0) / (omega * (beta - 1.0));
  }
  if (omega <= 1.5 - alpha) return 0.0;
  if (omega <= 2.0 - alpha)
    return (2.0 * omega + 2.0 * alpha - 3.0) / omega;
  return (beta * (omega + alpha - 1.0) - 1.0) / (omega * (beta - 1.0));
}

// ---------------------------------------------------------------------------
// S1: Cramer bounds

RuinAsymptote ruin_cramer_bounds(const CoefficientFamily& fam,
                                 const InnovationModel& model,
                                 const TargetSet& set,
                                 const Eigen::VectorXd& mu) {
  if (fam.memory() != Memory::Long && std::abs(fam.sum() - 1.0) > 1e-9)
    throw RegimeMismatch("S1 requires normalized coefficients (sum = 1)");
  if (fam.memory() == Memory::Long)
    throw RegimeMismatch("S1 requires absolutely summable coefficients");
  const Eigen::VectorXd& v = set.direction();
  const double level = set.level();
  const int d = set.dim();
  if (static_cast<int>(mu.size()) != d)
    throw InvalidParameter("mu dimension mismatch");
  if (d > 1 && !model.mgf_everywhere_finite())
    throw UnsupportedDimension(
        "d >= 2 Cramer bounds need an everywhere-finite log-MGF");

  RuinAsymptote out;
  auto lam_v = directional_mgf(model, v);
  const double mu_v = v.dot(mu);

  // ---- Upper bound: sup of t.gamma over the certified set D, searched
  // along t = kappa v (other directions have support_inf = -inf).
  // Membership limit: g_v(kappa) = Lambda(kappa v) - kappa v.mu < 0.
  auto g_v = [&](double k) { return lam_v(k) - k * mu_v; };
  double kappa_max = 0.0;
  double kappa_sharp = 0.0;  // margin-free boundary, for the pinch test
  bool unbounded_D = false;
  if (mu_v > 0.0 && level > 0.0) {
    try {
      kappa_max = expand_and_bisect_root(
          [&](double k) { return g_v(k) + kStrict; }, 1e-3, 1e9, 1e-12);
      kappa_sharp = expand_and_bisect_root(g_v, 1e-3, 1e9, 1e-13);
    } catch (const RootNotBracketed&) {
      unbounded_D = true;  // g stays negative: D unbounded along v
    }
  }
  if (unbounded_D) {
    out.upper = -kInf;
    out.notes += " D unbounded along v (bounded-support innovations);";
  } else if (kappa_max <= 0.0) {
    out.upper = 0.0;
    out.empty_feasible = true;
    out.notes += " no certified t in D;";
  } else {
    out.upper = -kappa_max * level;
    out.constants["kappa_max"] = kappa_max;
  }

  // ---- Lower bound: -inf over the tilt ray of r(t) [t grad Lambda(t) -
  // Lambda(t)], searched along unit directions mu-hat and v-hat.
  double best = kInf;  // inf of the positive objective
  double t_best = 0.0;
  std::vector<Eigen::VectorXd> rays;
  if (mu.norm() > 0.0) rays.push_back(mu.normalized());
  rays.push_back(v.normalized());
  for (const auto& u : rays) {
    auto lam_u = directional_mgf(model, u);
    // Domain cap along the ray (Pi interior) for d = 1; Gaussian-type
    // models are finite everywhere.
    double cap = 1e8;
    if (d == 1 && !model.mgf_everywhere_finite()) {
      TiltRegion pi = pi_region(fam, model, RegimeSpec::s1());
      if (!pi.decided) throw UndecidablePi(pi.reason);
      cap = (u(0) > 0 ? pi.lambda_max : -pi.lambda_min) * 0.999999;
      if (!(cap > 0.0)) continue;
    }
    auto objective = [&](double s) {
      if (!(s > 0.0) || s >= cap) return kInf;
      Eigen::VectorXd t = s * u;
      Eigen::VectorXd grad = model.grad_log_mgf(t);
      Eigen::VectorXd drift = grad - mu;
      // r(t): smallest r with r drift in the open half-space.
      double vd = v.dot(drift);
      if (vd <= 0.0) return kInf;
      double r = level / vd;
      return r * (t.dot(grad) - model.log_mgf(t));
    };
    MinResult m = log_grid_minimize(objective, 1e-4,
                                    std::min(cap, 1e8), 64, 1e-10);
    if (m.value < best) {
      best = m.value;
      t_best = m.x;
    }
  }
  out.lower = best == kInf ? -kInf : -best;
  out.constants["t_lower"] = t_best;

  // ---- Explicit limit (unique w with Lambda(w mu) = w |mu|^2). The root
  // may sit before the edge of the log-MGF domain even when the domain is
  // not the whole line; the exact value is only attached when the two
  // optimizer bounds pinch, which keeps the branch sound.
  bool mu_up = mu_v > 0.0 ? model.unbounded_above() : false;
  if (mu_up && mu.norm() > 0.0 && level > 0.0) {
    try {
      auto q = [&](double w) {
        return model.log_mgf(Eigen::VectorXd(w * mu)) - w * mu.squaredNorm();
      };
      double w = expand_and_bisect_root(q, 1e-3, 1e9, 1e-13);
      Eigen::VectorXd grad = model.grad_log_mgf(Eigen::VectorXd(w * mu));
      Eigen::VectorXd drift = grad - mu;
      double vd = v.dot(drift);
      if (vd > 0.0) {
        double r = level / vd;
        Eigen::VectorXd gamma_star = r * drift;
        // gamma* must minimize mu.gamma over A: inf = level (v.mu)/|v|^2
        // when mu is parallel to v.
        double inf_mu_gamma = set.support_inf(mu);
        if (inf_mu_gamma > 0.0 &&
            std::abs(mu.dot(gamma_star) - inf_mu_gamma) <=
                1e-9 * (1.0 + std::abs(inf_mu_gamma))) {
          out.constants["w"] = w;
          out.constants["gamma_star"] = v.dot(gamma_star) / v.norm();
          out.constants["r"] = r;
          attach_exact(out, -w * gamma_star.dot(mu),
                       kappa_sharp > 0.0
                           ? std::optional<double>(-kappa_sharp * level)
                           : std::nullopt);
        }
      }
    } catch (const RootNotBracketed&) {
      out.notes += " explicit-limit root w not bracketed;";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// S3: Gaussian scale

RuinAsymptote ruin_gaussian_bounds(const Eigen::MatrixXd& sigma,
                                   const Eigen::VectorXd& mu,
                                   const TargetSet& set, double omega) {
  if (!(omega > 0.5 && omega <= 1.0))
    throw OutOfRange("S3 bounds need omega in (1/2, 1]");
  if (!set.condition_a(mu).holds)
    throw EmptyFeasibleSet("target set fails Condition A for this drift");
  const Eigen::VectorXd& v = set.direction();
  const double level = set.level();
  Eigen::MatrixXd sigma_inv = sigma.llt().solve(
      Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  double vSv = v.dot(sigma * v);
  const double ex = (2.0 * omega - 1.0) / omega;

  auto J = [&](double c) {
    return std::pow(c, -ex) * quad_inner_inf(sigma_inv, v, vSv, mu, level, c);
  };
  MinResult m = log_grid_minimize(J, 1e-4, 1e4, 64, 1e-10);
  RuinAsymptote out;
  out.lower = -m.value;
  out.upper = -m.value;  // interior and closure agree for open half-spaces
  out.constants["c_opt"] = m.x;

  // Explicit form: gamma0 = closest boundary point in the Sigma^{-1} metric.
  Eigen::VectorXd gamma0 = level * (sigma * v) / vSv;
  bool ok = true;
  auto basis = perp_basis(v);
  for (double s : {-8.0, -2.0, -0.5, 0.5, 2.0, 8.0}) {
    for (const auto& w : basis) {
      Eigen::VectorXd gb = gamma0 + s * w;  // boundary grid
      if (gb.dot(sigma_inv * gb) < gamma0.dot(sigma_inv * gamma0) - 1e-12 ||
          mu.dot(sigma_inv * (gb - gamma0)) < -1e-12)
        ok = false;
    }
    Eigen::VectorXd gr = gamma0 * (1.0 + std::abs(s));  // radial grid
    if (gr.dot(sigma_inv * gr) < gamma0.dot(sigma_inv * gamma0) - 1e-12 ||
        mu.dot(sigma_inv * (gr - gamma0)) < -1e-12)
      ok = false;
  }
  if (ok) {
    double mSm = mu.dot(sigma_inv * mu);
    double gSg = gamma0.dot(sigma_inv * gamma0);
    double mSg = mu.dot(sigma_inv * gamma0);
    double disc = (2.0 * omega - 1.0) * (mSm * gSg - mSg * mSg) +
                  omega * omega * mSg * mSg;
    double c0 = (std::sqrt(disc) - (1.0 - omega) * mSg) / gSg;
    Eigen::VectorXd z = mu + c0 * gamma0;
    double val = -0.5 * std::pow(c0, -ex) * z.dot(sigma_inv * z);
    out.constants["c0"] = c0;
    attach_exact(out, val);
  }
  return out;
}

// ---------------------------------------------------------------------------
// S4: heavy scale

RuinAsymptote ruin_heavy_bounds(const HeavyProfile& hp,
                                const Eigen::VectorXd& mu,
                                const TargetSet& set, double omega) {
  if (!(omega >= 1.0)) throw OutOfRange("S4 bounds need omega >= 1");
  if (!(hp.beta > 1.0)) throw InvalidParameter("heavy profile beta <= 1");
  if (!set.condition_a(mu).holds)
    throw EmptyFeasibleSet("target set fails Condition A for this drift");
  const double beta = hp.beta;
  const double nu = 1.0 + (omega - 1.0) * beta / (beta - 1.0);

  auto F = [&](const Eigen::VectorXd& x) { return heavy_conjugate(hp, x); };
  auto J = [&](double c) {
    return std::pow(c, -nu / omega) * half_space_inner_inf(F, mu, set, c);
  };
  MinResult m = log_grid_minimize(J, 1e-4, 1e4, 64, 1e-10);
  RuinAsymptote out;
  // The displayed upper bound carries the same negation as the lower one;
  // reported negated for monotone consistency.
  out.lower = -m.value;
  out.upper = -m.value;
  out.constants["nu"] = nu;
  out.constants["c_opt"] = m.x;

  // Explicit form: isotropic zeta over the relevant directions and gamma0
  // the closest point of the half-space.
  const Eigen::VectorXd& v = set.direction();
  const double level = set.level();
  Eigen::VectorXd gamma0 = level * v / v.squaredNorm();
  const int d = set.dim();
  bool zeta_const = true;
  double a = 0.0;
  {
    std::vector<Eigen::VectorXd> dirs;
    if (d == 1) {
      Eigen::VectorXd u(1);
      u << (v(0) > 0 ? 1.0 : -1.0);
      dirs.push_back(u);
    } else {
      const int N = 64;
      for (int k = 0; k < N; ++k) {
        // Coarse sphere grid filtered to the relevant cone.
        Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
        double th = 2.0 * M_PI * k / N;
        u(0) = std::cos(th);
        u(1) = std::sin(th);
        if (d == 3) {
          u(2) = std::cos(3.0 * th);
          u.normalize();
        }
        if (u.dot(mu) > 0.0 || u.dot(gamma0) > 0.0) dirs.push_back(u);
      }
    }
    if (dirs.empty()) zeta_const = false;
    for (size_t k = 0; k < dirs.size(); ++k) {
      double z = hp.zeta(dirs[k]);
      if (k == 0)
        a = z;
      else if (std::abs(z - a) > 1e-9 * (1.0 + std::abs(a)))
        zeta_const = false;
    }
  }
  bool gamma0_ok = true;
  for (const auto& w : perp_basis(v)) {
    for (double s : {-4.0, -1.0, 1.0, 4.0}) {
      Eigen::VectorXd gb = gamma0 + s * w;
      if (gb.norm() < gamma0.norm() - 1e-12 ||
          mu.dot(gb - gamma0) < -1e-12)
        gamma0_ok = false;
    }
  }
  if (zeta_const && gamma0_ok && a > 0.0) {
    double K_beta =
        (beta - 1.0) * std::pow(a * std::pow(beta, beta), 1.0 / (1.0 - beta));
    double mg = mu.dot(gamma0);
    double disc = 4.0 * (beta * omega - 1.0) *
                      (mu.squaredNorm() * gamma0.squaredNorm() - mg * mg) +
                  beta * beta * omega * omega * mg * mg;
    double c0 = (std::sqrt(disc) + (beta * omega - 2.0) * mg) /
                (2.0 * gamma0.squaredNorm());
    double val = -K_beta * std::pow(c0, -nu / omega) *
                 std::pow((mu + c0 * gamma0).norm(), beta / (beta - 1.0));
    out.constants["K_beta"] = K_beta;
    out.constants["c0"] = c0;
    attach_exact(out, val);
  }
  return out;
}

// ---------------------------------------------------------------------------
// R2: long-memory linear scale

RuinAsymptote ruin_lm_bounds(const CoefficientFamily& fam,
                             const InnovationModel& model,
                             const Eigen::VectorXd& mu, const TargetSet& set) {
  if (fam.memory() != Memory::Long)
    throw RegimeMismatch("R2 bounds need a balanced-power family");
  if (!set.condition_a(mu).holds)
    throw EmptyFeasibleSet("target set fails Condition A for this drift");
  const double alpha = fam.alpha();
  const double level = set.level();
  RuinAsymptote out;

  if (alpha == 1.0) {
    // Both bounds collapse to -inf_c c^{-1} inf_{gamma} Lambda*(mu+c gamma).
    auto F = [&](const Eigen::VectorXd& x) { return legendre(model, x).value; };
    auto J = [&](double c) {
      return half_space_inner_inf(F, mu, set, c) / c;
    };
    MinResult m = log_grid_minimize(J, 1e-4, 1e4, 64, 1e-10);
    out.lower = -m.value;
    out.upper = -m.value;
    out.constants["c_opt"] = m.x;
    return out;
  }

  if (set.dim() != 1)
    throw UnsupportedDimension("R2 bounds with alpha < 1 are univariate");
  MemoryKernel kern(alpha, fam.p());
  const double C = kernel_integral(kern, 2.0);
  out.constants["C_alpha_2"] = C;
  // Gaussian innovations admit the scaled quadratic forms exactly; other
  // laws go through the quadrature-backed transform.
  const bool gauss = model.law() == Law::Gaussian;
  const double s2 = model.variance();
  auto lam_a = [&, gauss, s2](double t) {
    if (gauss) return 0.5 * C * s2 * t * t;
    return deformed_log_mgf(model, kern, t);
  };
  auto lam_a_conj = [&, gauss, s2](double x) {
    if (gauss) return x * x / (2.0 * C * s2);
    return legendre(std::function<double(double)>(lam_a), x).value;
  };
  const double mu0 = mu(0);

  // Lower bound.
  auto J = [&](double c) {
    return std::pow(c, 1.0 / (alpha - 2.0)) * lam_a_conj(mu0 + c * level);
  };
  MinResult ml = log_grid_minimize(J, 1e-4, 1e4, 64, 1e-10);
  out.lower = -ml.value;
  out.constants["c_opt"] = ml.x;

  // Upper bound: inf over t in G of the inner sup over u, in closed form:
  // sup_u { -u^(a-1) K + u D } = -(2-a) K ((1-a) K / (-D))^((a-1)/(2-a)).
  auto upper_at = [&](double t) {
    if (!(t > 0.0) || !(t * mu0 > 0.0)) return kInf;
    double D = lam_a(t) - t * mu0;
    if (!(D < -kStrict)) return kInf;  // outside G
    double K = t * level;
    double ustar = std::pow((1.0 - alpha) * K / (-D), 1.0 / (2.0 - alpha));
    return -std::pow(ustar, alpha - 1.0) * K + ustar * D;  // the inner sup
  };
  MinResult mu_ = log_grid_minimize(upper_at, 1e-4, 1e4, 64, 1e-10);
  if (mu_.value == kInf) {
    // G is nonempty under Condition A; a failed scan is reported, then
    // widened once.
    MinResult wide = log_grid_minimize(upper_at, 1e-8, 1e8, 64, 1e-10);
    if (wide.value == kInf) {
      out.empty_feasible = true;
      out.notes += " G scan found no feasible tilt;";
      out.upper = 0.0;
      return out;
    }
    out.upper = wide.value;
    out.constants["t_opt"] = wide.x;
    return out;
  }
  out.upper = mu_.value;
  out.constants["t_opt"] = mu_.x;
  if (out.upper < out.lower) std::swap(out.upper, out.lower);
  return out;
}

// ---------------------------------------------------------------------------
// R3: long-memory Gaussian scale

RuinAsymptote ruin_lm_gaussian_bounds(const Eigen::MatrixXd& sigma,
                                      const Eigen::VectorXd& mu,
                                      const TargetSet& set, double alpha,
                                      double p, double omega) {
  if (!(alpha > 0.5 && alpha <= 1.0)) throw OutOfRange("alpha in (1/2, 1]");
  if (!(omega > 1.5 - alpha && omega <= 2.0 - alpha))
    throw OutOfRange("R3 bounds need omega in (3/2 - alpha, 2 - alpha]");
  if (!set.condition_a(mu).holds)
    throw EmptyFeasibleSet("target set fails Condition A for this drift");

  const Eigen::VectorXd& v = set.direction();
  const double level = set.level();
  MemoryKernel kern(alpha, p);
  const double C = kernel_integral(kern, 2.0);
  Eigen::MatrixXd sigma_inv = sigma.llt().solve(
      Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  double vSv = v.dot(sigma * v);
  const double ex = -2.0 + (3.0 - 2.0 * alpha) / omega;

  auto J = [&](double c) {
    return std::pow(c, ex) * quad_inner_inf(sigma_inv, v, vSv, mu, level, c);
  };
  MinResult ml = log_grid_minimize(J, 1e-4, 1e4, 64, 1e-10);
  RuinAsymptote out;
  out.lower = -ml.value / C;
  out.constants["C_alpha_2"] = C;
  out.constants["c_opt"] = ml.x;

  if (alpha == 1.0) {
    out.upper = out.lower;  // C = 1 and both branches coincide
  } else {
    const double r = (3.0 - 2.0 * alpha) / omega;
    const double K = omega * std::pow(3.0 - 2.0 * alpha - omega, 1.0 - r) /
                     std::pow(2.0 * (alpha + omega) - 3.0, 2.0 - r);
    const double mu_v = v.dot(mu);
    auto upper_at = [&](double k) {
      if (!(k > 0.0)) return kInf;
      double drift = k * mu_v - 0.5 * C * k * k * vSv;
      if (!(drift > kStrict)) return kInf;  // outside G
      return -std::pow(drift, -1.0 + r) * std::pow(k * level, 2.0 - r);
    };
    MinResult mu_ = log_grid_minimize(upper_at, 1e-6, 1e6, 64, 1e-10);
    if (mu_.value == kInf) {
      out.empty_feasible = true;
      out.notes += " G scan found no feasible tilt;";
      out.upper = 0.0;
    } else {
      out.upper = K * mu_.value;  // mu_.value is negative
      out.constants["K_alpha_omega"] = K;
      out.constants["t_opt"] = mu_.x;
    }
  }

  // Explicit one-dimensional limit for A = (1, inf).
  if (set.dim() == 1 && std::abs(level - 1.0) < 1e-15 && v(0) == 1.0 &&
      mu(0) > 0.0) {
    double s2 = sigma(0, 0);
    double m = mu(0);
    double val = -std::pow(2.0 * (omega + alpha) - 3.0,
                           (3.0 - 2.0 * (omega + alpha)) / omega) /
                 std::pow(3.0 - 2.0 * alpha, (3.0 - 2.0 * alpha) / omega) *
                 (2.0 / (s2 * C)) * omega * omega *
                 std::pow(m, (3.0 - 2.0 * alpha) / omega);
    attach_exact(out, val);
  }
  if (out.upper < out.lower) {
    out.notes += " upper clipped to lower (tolerance slop);";
    out.upper = out.lower;
  }
  return out;
}

// ---------------------------------------------------------------------------
// R4: long-memory heavy scale

RuinAsymptote ruin_lm_heavy_bounds(const HeavyProfile& hp,
                                   const Eigen::VectorXd& mu,
                                   const TargetSet& set, double alpha,
                                   double p, double omega) {
  if (!(alpha > 0.5 && alpha <= 1.0)) throw OutOfRange("alpha in (1/2, 1]");
  if (!(omega >= 2.0 - alpha))
    throw OutOfRange("R4 bounds need omega >= 2 - alpha");
  const double beta = hp.beta;
  if (std::abs(omega - (beta * (1.0 - alpha) + 1.0)) < 1e-12)
    throw ForbiddenOmega("omega = beta (1 - alpha) + 1 is excluded");
  if (!set.condition_a(mu).holds)
    throw EmptyFeasibleSet("target set fails Condition A for this drift");

  MemoryKernel kern(alpha, p);
  const double C = kernel_integral(kern, beta);
  if (C == kInf)
    throw InvalidParameter("kernel integral diverges (alpha beta <= 1)");
  const double level = set.level();
  const Eigen::VectorXd& v = set.direction();
  const double mu_v = v.dot(mu);

  RuinAsymptote out;
  out.constants["C_alpha_beta"] = C;
  const double lower_ex =
      (beta * (omega + alpha - 1.0) - 1.0) / (omega * (beta - 1.0));

  auto F = [&](const Eigen::VectorXd& x) { return heavy_conjugate(hp, x); };
  auto J = [&](double c) {
    return std::pow(c, -lower_ex) * half_space_inner_inf(F, mu, set, c) /
           std::pow(C, 1.0 / (beta - 1.0));
  };
  MinResult ml = log_grid_minimize(J, 1e-4, 1e4, 64, 1e-10);
  out.lower = -ml.value;
  out.constants["c_opt"] = ml.x;
  out.constants["lower_exponent"] = lower_ex;

  auto lam_h_v = [&](double k) {
    return heavy_log_mgf(hp, Eigen::VectorXd(k * v));
  };

  if (alpha == 1.0) {
    auto Ju = [&](double c) {
      return std::pow(c, -(beta * omega - 1.0) / (omega * (beta - 1.0))) *
             half_space_inner_inf(F, mu, set, c);
    };
    MinResult mu_ = log_grid_minimize(Ju, 1e-4, 1e4, 64, 1e-10);
    out.upper = -mu_.value;
  } else if (omega < beta * (1.0 - alpha) + 1.0) {
    const double e1 = (beta * (1.0 - alpha) + 1.0 - omega) /
                      (omega * (beta - 1.0));
    const double e2 = (beta * (omega + alpha - 1.0) - 1.0) /
                      (omega * (beta - 1.0));
    const double K1 = omega * (beta - 1.0) *
                      std::pow(beta * (1.0 - alpha) + 1.0 - omega, -e1) /
                      std::pow(beta * (omega + alpha - 1.0) - 1.0, e2);
    auto upper_at = [&](double k) {
      if (!(k > 0.0) || !(k * mu_v > 0.0)) return kInf;
      double drift = k * mu_v - C * lam_h_v(k);
      if (!(drift > kStrict)) return kInf;  // outside G^(1)
      return -std::pow(drift, e1) * std::pow(k * level, e2);
    };
    MinResult mu_ = log_grid_minimize(upper_at, 1e-6, 1e6, 64, 1e-10);
    if (mu_.value == kInf) {
      out.empty_feasible = true;
      out.notes += " G(1) scan found no feasible tilt;";
      out.upper = 0.0;
    } else {
      out.upper = K1 * mu_.value;
      out.constants["K1"] = K1;
      out.constants["t_opt"] = mu_.x;
    }
  } else {
    const double den = omega - 1.0 - beta * (1.0 - alpha);
    const double num = 1.0 + beta * (1.0 - alpha);
    const double K2 =
        den * std::pow(num, num / den) / std::pow(omega, omega / den);
    auto penalty = [&](double k) {
      return K2 * std::pow(C * lam_h_v(k), omega / den) /
             std::pow(k * mu_v, num / den);
    };
    auto upper_at = [&](double k) {
      if (!(k > 0.0) || !(k * mu_v > 0.0)) return kInf;
      double val = k * level - penalty(k);
      if (!(val > kStrict)) return kInf;  // outside G^(2)
      return -val;
    };
    MinResult mu_ = log_grid_minimize(upper_at, 1e-6, 1e6, 64, 1e-10);
    if (mu_.value == kInf) {
      out.empty_feasible = true;
      out.notes += " G(2) scan found no feasible tilt;";
      out.upper = 0.0;
    } else {
      out.upper = mu_.value;  // negative of the attained sup
      out.constants["K2"] = K2;
      out.constants["t_opt"] = mu_.x;
    }
  }

  // Explicit one-dimensional limit for A = (1, inf) and one-sided profile.
  if (set.dim() == 1 && std::abs(level - 1.0) < 1e-15 && v(0) == 1.0 &&
      mu(0) > 0.0) {
    Eigen::VectorXd e(1);
    e << 1.0;
    double xi = hp.zeta(e);
    double num = 1.0 + beta * (1.0 - alpha);
    double e_mu = num / (omega * (beta - 1.0));
    double val = -std::pow(beta * (omega + alpha - 1.0) - 1.0,
                           (1.0 - beta * (omega + alpha - 1.0)) /
                               (omega * (beta - 1.0))) /
                 std::pow(num, e_mu) * (beta - 1.0) *
                 std::pow(std::pow(omega, beta) / (xi * C),
                          1.0 / (beta - 1.0)) *
                 std::pow(mu(0), e_mu);
    attach_exact(out, val);
  }
  if (out.upper < out.lower) {
    out.notes += " upper clipped to lower (tolerance slop);";
    out.upper = out.lower;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generic envelope bounds from g_n

EnvelopeBounds nyrhinen_bounds(
    const std::function<double(long, double)>& g_n, const TargetSet& set,
    Interval t_box, long n_max) {
  if (set.dim() != 1)
    throw UnsupportedDimension(
        "envelope bounds take the scalar projection of g_n");
  const double level = set.level();
  EnvelopeBounds out;
  if (!(level > 0.0)) {
    out.degenerate = true;
    return out;
  }

  const long n1 = n_max / 2, n2 = n_max;
  auto g_lim = [&](double t) {
    // Richardson step for g_n = g + c/n + o(1/n).
    double a = g_n(n1, t), b = g_n(n2, t);
    if (a == kInf || b == kInf) return kInf;
    return (static_cast<double>(n2) * b - static_cast<double>(n1) * a) /
           static_cast<double>(n2 - n1);
  };

  // Certified membership in D: finite moments at every probed n and a
  // strictly negative limiting g.
  auto in_D = [&](double t) {
    if (!(t > 0.0)) return false;
    if (g_lim(t) >= -kStrict) return false;
    for (long n : {1L, 2L, 5L, 10L, 100L, 1000L, n_max})
      if (g_n(n, t) == kInf) return false;
    return true;
  };

  double t0 = std::max(t_box.lo, 1e-9);
  if (!in_D(t0))
    throw NoNegativeG("no t with certified negative g near the origin");

  // Largest certified t by doubling + bisection on the certificate.
  double hi = t0;
  while (hi < t_box.hi && in_D(hi * 2.0)) hi *= 2.0;
  double hi_bad = std::min(hi * 2.0, t_box.hi);
  if (in_D(hi_bad)) {
    out.t_upper = hi_bad;  // certified on the whole box
  } else {
    double a = hi, b = hi_bad;
    for (int i = 0; i < 200 && (b - a) > 1e-12 * (1.0 + b); ++i) {
      double mid = 0.5 * (a + b);
      (in_D(mid) ? a : b) = mid;
    }
    out.t_upper = a;
  }
  out.upper = -out.t_upper * level;

  // Lower bound: sup eta(t) [g(t) - t g'(t)] with the extrapolated g and a
  // central-difference gradient.
  auto objective = [&](double t) {
    double h = 1e-5 * (1.0 + std::abs(t));
    double gm = g_lim(t - h), gp = g_lim(t + h), g0 = g_lim(t);
    if (gm == kInf || gp == kInf || g0 == kInf) return kInf;
    double dg = (gp - gm) / (2.0 * h);
    if (!(dg > 0.0)) return kInf;
    double eta = level / dg;
    return eta * (t * dg - g0);  // positive objective; lower = -inf of it
  };
  MinResult m = log_grid_minimize(objective, std::max(t_box.lo, 1e-6),
                                  std::min(t_box.hi, 1e6), 64, 1e-12);
  if (m.value != kInf) {
    out.lower = -m.value;
    out.t_lower = m.x;
  }
  return out;
}

}  // namespace masim
