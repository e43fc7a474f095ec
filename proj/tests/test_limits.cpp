#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "masim/limits.hpp"
#include "oracles.hpp"

using namespace masim;

namespace {
Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}
const auto kGauss = InnovationModel::gaussian1(1.0);
const auto kIid = CoefficientFamily::finite_lag({{0, 1.0}});
const auto kSet1 = TargetSet::half_line(1.0);
}  // namespace

TEST_CASE("segment rate bounds in the plain scenarios") {
  auto rb = segment_rate_bounds(kIid, kGauss, RegimeSpec::s2(), kSet1);
  CHECK(rb.lower == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rb.upper == doctest::Approx(0.5).epsilon(1e-9));

  // set touching the mean: zero rate
  auto rb0 = segment_rate_bounds(kIid, kGauss, RegimeSpec::s2(),
                                 TargetSet::half_line(-0.5));
  CHECK(rb0.lower == 0.0);
  CHECK(rb0.upper == 0.0);

  // scale covariance: Gaussian conjugate is quadratic in the threshold
  auto rb2 = segment_rate_bounds(kIid, kGauss, RegimeSpec::s2(),
                                 TargetSet::half_line(2.0));
  CHECK(rb2.lower == doctest::Approx(4.0 * rb.lower).epsilon(1e-8));

  // long-memory deformation rescales the Gaussian rate by C_{alpha,2}
  auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
  double C = kernel_integral(MemoryKernel(0.75, 1.0), 2.0);
  auto rbr = segment_rate_bounds(bp, kGauss, RegimeSpec::r2(bp), kSet1);
  CHECK(rbr.lower == doctest::Approx(1.0 / (2.0 * C)).epsilon(1e-6));
  CHECK(rbr.upper == doctest::Approx(rbr.lower).epsilon(1e-9));
  CHECK(0.0 <= rbr.lower);
  CHECK(rbr.lower <= rbr.upper);
}

TEST_CASE("segment rate bounds with a restricted tilt region") {
  auto ce = InnovationModel::centered_exponential(1.0);
  auto ma = CoefficientFamily::finite_lag({{0, 0.5}, {1, 0.5}});
  auto rb = segment_rate_bounds(ma, ce, RegimeSpec::s1(), kSet1);
  CHECK(rb.lambda_star == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rb.lower <= rb.upper);
  CHECK(rb.lower > 0.0);
  // At the feasibility threshold eta1, eta1 lambda* equals the shrunken
  // rate, which is exactly I^*.
  if (rb.theta_threshold > 0.0)
    CHECK(rb.upper ==
          doctest::Approx(rb.theta_threshold * rb.lambda_star).epsilon(1e-6));
  // Gaussian: unrestricted tilts, bounds collapse
  auto rbg = segment_rate_bounds(kIid, kGauss, RegimeSpec::s1(), kSet1);
  CHECK(rbg.lower == doctest::Approx(rbg.upper).epsilon(1e-9));

  // Independent route for the feasibility scan: dense eta grid, no
  // bisection, with the closed-form conjugate x - log(1+x) of the
  // centered exponential.
  {
    auto conj = [](double x) { return x - std::log1p(x); };
    double best = kInf;
    for (long k = 1; k <= 40000; ++k) {
      double eta = 1e-3 * static_cast<double>(k);
      double h = conj(1.0 + eta);
      if (eta * rb.lambda_star > h) best = std::min(best, h);
    }
    CHECK(rb.upper == doctest::Approx(best).epsilon(1e-3));
  }

  // Level at or below the mean with a finite lambda*: every shrinkage is
  // feasible and the rate is zero.
  auto rb0 = segment_rate_bounds(ma, ce, RegimeSpec::s1(),
                                 TargetSet::half_line(-0.5));
  CHECK(rb0.upper == 0.0);
  CHECK(rb0.lower == 0.0);
}

TEST_CASE("exponent tables: frozen cells, continuity, range errors") {
  CHECK(growth_theta(Memory::Short, 1.0, 0.75, 2.0) == 1.0);
  CHECK(growth_theta(Memory::Long, 1.0, 0.75, 2.0) == 2.0);
  CHECK(growth_theta(Memory::Long, 0.5, 0.75, 2.0) == kInf);
  CHECK(decay_theta(Memory::Short, 1.0, 0.75, 2.0) == 1.0);
  CHECK(decay_theta(Memory::Long, 1.0, 0.75, 2.0) == 0.5);
  CHECK(decay_theta(Memory::Long, 2.0, 0.75, 2.0) == 1.25);
  // alpha = 1 collapses the memory columns on both surviving rows: the
  // moderate range omega <= 1 and the huge range omega >= 2 - alpha = 1
  // (the in-between row is empty at alpha = 1).
  for (double b : {1.5, 2.0, 3.0})
    for (double w : {0.6, 0.9, 1.0, 1.5, 2.5}) {
      CHECK(decay_theta(Memory::Long, w, 1.0, b) ==
            doctest::Approx(decay_theta(Memory::Short, w, 1.0, b)));
      CHECK(growth_theta(Memory::Long, w, 1.0, b) ==
            doctest::Approx(growth_theta(Memory::Short, w, 1.0, b)));
    }
  // continuity in omega across the row boundaries
  for (double a : {0.6, 0.75, 0.9}) {
    for (double b : {1.5, 2.0, 3.0}) {
      for (double w0 : {1.5 - a, 1.0, 2.0 - a}) {
        for (Memory mem : {Memory::Short, Memory::Long}) {
          double below = growth_theta(mem, w0 - 1e-9, a, b);
          double above = growth_theta(mem, w0 + 1e-9, a, b);
          // theta blows up through the memory-collapse boundary; compare
          // only where both sides are bounded.
          if (std::isfinite(below) && std::isfinite(above) && below < 1e6 &&
              above < 1e6)
            CHECK(below == doctest::Approx(above).epsilon(1e-6));
          CHECK(decay_theta(mem, w0 - 1e-9, a, b) ==
                doctest::Approx(decay_theta(mem, w0 + 1e-9, a, b))
                    .epsilon(1e-6));
        }
      }
    }
  }
  CHECK_THROWS_AS(growth_theta(Memory::Short, 0.4, 0.75, 2.0), OutOfRange);
  CHECK_THROWS_AS(decay_theta(Memory::Long, 1.0, 1.2, 2.0), OutOfRange);
  CHECK_THROWS_AS(growth_theta(Memory::Short, 2.0, 0.75, 0.9), OutOfRange);
}

TEST_CASE("Cramer ruin bounds and the explicit limit") {
  auto r = ruin_cramer_bounds(kIid, kGauss, kSet1, vec1(0.5));
  REQUIRE(r.exact.has_value());
  CHECK(*r.exact == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(r.constants.at("w") == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.constants.at("gamma_star") == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.lower <= r.upper + 1e-12);

  auto r2 = ruin_cramer_bounds(kIid, InnovationModel::gaussian1(4.0), kSet1,
                               vec1(1.0));
  REQUIRE(r2.exact.has_value());
  CHECK(*r2.exact == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(r2.constants.at("w") == doctest::Approx(0.5).epsilon(1e-9));

  // centered exponential: w solves -log(1 - w/2) - w/2 = w/4
  auto ce = InnovationModel::centered_exponential(1.0);
  auto r3 = ruin_cramer_bounds(kIid, ce, kSet1, vec1(0.5));
  double lo = 0.1, hi = 1.9999;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double g = -std::log1p(-0.5 * mid) - 0.5 * mid - 0.25 * mid;
    (g < 0 ? lo : hi) = mid;
  }
  CHECK(r3.constants.at("w") == doctest::Approx(lo).epsilon(1e-8));
  CHECK(lo == doctest::Approx(1.1656).epsilon(1e-3));
  CHECK(r3.lower <= r3.upper + 1e-12);

  // d = 2 Gaussian along the set direction
  Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd v(2), mu(2);
  v << 1.0, 0.0;
  mu << 0.5, 0.0;
  auto r4 = ruin_cramer_bounds(kIid, InnovationModel::gaussian(I2),
                               TargetSet::half_space(v, 1.0), mu);
  REQUIRE(r4.exact.has_value());
  CHECK(*r4.exact == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("Gaussian-scale ruin bounds (moderate deviations)") {
  Eigen::MatrixXd s2(1, 1);
  s2 << 1.0;
  auto r = ruin_gaussian_bounds(s2, vec1(0.5), kSet1, 0.75);
  REQUIRE(r.exact.has_value());
  // closed form: c0 = (2w-1) mu, value -(1/2) c0^{-(2w-1)/w} (mu + c0)^2
  double c0 = 0.5 * 0.5;
  double want = -0.5 * std::pow(c0, -2.0 / 3.0) * 0.75 * 0.75;
  CHECK(*r.exact == doctest::Approx(want).epsilon(1e-9));
  CHECK(r.constants.at("c0") == doctest::Approx(c0).epsilon(1e-12));
  CHECK(*r.exact == doctest::Approx(-0.70870).epsilon(1e-4));

  // omega = 1 meets the Cramer value
  auto r1 = ruin_gaussian_bounds(s2, vec1(0.5), kSet1, 1.0);
  auto rc = ruin_cramer_bounds(kIid, kGauss, kSet1, vec1(0.5));
  CHECK(*r1.exact ==
        doctest::Approx(*rc.exact).epsilon(1e-12));

  // block-separable d = 2 reduces to the first coordinate
  Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd v(2), mu(2);
  v << 1.0, 0.0;
  mu << 1.0, 0.0;
  auto rd2 = ruin_gaussian_bounds(I2, mu, TargetSet::half_space(v, 1.0),
                                  0.75);
  Eigen::MatrixXd s1(1, 1);
  s1 << 1.0;
  auto rd1 = ruin_gaussian_bounds(s1, vec1(1.0), kSet1, 0.75);
  CHECK(*rd2.exact == doctest::Approx(*rd1.exact).epsilon(1e-9));

  CHECK_THROWS_AS(ruin_gaussian_bounds(s2, vec1(-0.5), kSet1, 0.75),
                  EmptyFeasibleSet);
  CHECK_THROWS_AS(ruin_gaussian_bounds(s2, vec1(0.5), kSet1, 1.5),
                  OutOfRange);
}

TEST_CASE("heavy-scale ruin bounds (huge deviations)") {
  auto hp = HeavyProfile::isotropic(2.0, 0.5);
  auto r = ruin_heavy_bounds(hp, vec1(0.5), kSet1, 1.5);
  REQUIRE(r.exact.has_value());
  CHECK(*r.exact == doctest::Approx(-1.125).epsilon(1e-8));
  CHECK(r.constants.at("K_beta") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.constants.at("c0") == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.constants.at("nu") == doctest::Approx(2.0));
  // grid search over c reproduces the closed form
  double grid = kInf;
  for (double c = 1e-3; c < 1e3; c *= 1.001)
    grid = std::min(grid,
                    std::pow(c, -2.0 / 1.5) * 0.5 * (0.5 + c) * (0.5 + c));
  CHECK(-grid == doctest::Approx(*r.exact).epsilon(1e-6));

  // omega = 1: nu = 1 exactly
  auto r1 = ruin_heavy_bounds(hp, vec1(0.5), kSet1, 1.0);
  CHECK(r1.constants.at("nu") == 1.0);
}

TEST_CASE("long-memory linear-scale ruin bounds") {
  auto bp1 = CoefficientFamily::balanced_power(1.0, 1.0);
  auto r1 = ruin_lm_bounds(bp1, kGauss, vec1(0.5), kSet1);
  // alpha = 1 Gaussian: inf_c (mu + c)^2/(2c) at c = mu gives 2 mu
  CHECK(r1.lower == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(r1.upper == doctest::Approx(-1.0).epsilon(1e-8));

  auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
  auto r = ruin_lm_bounds(bp, kGauss, vec1(0.5), kSet1);
  double C = r.constants.at("C_alpha_2");
  // quadratic-conjugate scaling: minimize c^{1/(a-2)} (mu+c)^2/(2C)
  double grid = kInf;
  for (double c = 1e-3; c < 1e3; c *= 1.001)
    grid = std::min(grid, std::pow(c, 1.0 / (0.75 - 2.0)) * (0.5 + c) *
                              (0.5 + c) / (2.0 * C));
  CHECK(r.lower == doctest::Approx(-grid).epsilon(1e-6));
  CHECK(r.upper == doctest::Approx(r.lower).epsilon(1e-6));

  CHECK_THROWS_AS(ruin_lm_bounds(bp, kGauss, vec1(-0.5), kSet1),
                  EmptyFeasibleSet);
}

TEST_CASE("long-memory Gaussian-scale ruin bounds") {
  Eigen::MatrixXd s2(1, 1);
  s2 << 1.0;
  auto r = ruin_lm_gaussian_bounds(s2, vec1(0.5), kSet1, 0.75, 1.0, 1.0);
  double C = r.constants.at("C_alpha_2");
  REQUIRE(r.exact.has_value());
  double want = -std::pow(0.5, -0.5) / std::pow(1.5, 1.5) * (2.0 / C) *
                std::pow(0.5, 1.5);
  CHECK(*r.exact == doctest::Approx(want).epsilon(1e-9));

  // alpha = 1 at omega = 1 meets the short-memory Gaussian value
  auto ra = ruin_lm_gaussian_bounds(s2, vec1(0.5), kSet1, 1.0, 1.0, 1.0);
  auto rg = ruin_gaussian_bounds(s2, vec1(0.5), kSet1, 1.0);
  CHECK(ra.lower == doctest::Approx(*rg.exact).epsilon(1e-10));

  // omega = 2 - alpha matches the linear-scale exponent (b_n ~ n)
  double ex = 2.0 * (1.25 + 0.75) - 3.0;
  CHECK(ex == doctest::Approx(1.0));
}

TEST_CASE("long-memory heavy-scale ruin bounds") {
  auto hp = HeavyProfile::one_dim(2.0, 0.5, 0.5);
  auto r = ruin_lm_heavy_bounds(hp, vec1(0.5), kSet1, 0.75, 1.0, 1.25);
  double C = r.constants.at("C_alpha_beta");
  REQUIRE(r.exact.has_value());
  double want = -(1.0 / std::pow(1.5, 1.2)) * (std::pow(1.25, 2.0) /
                (0.5 * C)) * std::pow(0.5, 1.2);
  CHECK(*r.exact == doctest::Approx(want).epsilon(1e-9));
  CHECK(r.constants.at("lower_exponent") == doctest::Approx(0.8));

  CHECK_THROWS_AS(
      ruin_lm_heavy_bounds(hp, vec1(0.5), kSet1, 0.75, 1.0, 1.5),
      ForbiddenOmega);

  // G^(2) branch (omega above beta(1-alpha)+1): the optimized upper bound
  // meets the lower bound and the one-dimensional closed form.
  for (double w : {1.75, 2.0, 2.5}) {
    auto r2 = ruin_lm_heavy_bounds(hp, vec1(0.5), kSet1, 0.75, 1.0, w);
    CHECK(r2.lower <= r2.upper + 1e-9);
    CHECK(r2.upper < 0.0);
    REQUIRE(r2.exact.has_value());
    double C2 = r2.constants.at("C_alpha_beta");
    double num = 1.5, emu = num / w;
    double closed = -std::pow(2.0 * (w - 0.25) - 1.0, (1.0 - 2.0 * (w - 0.25)) / w) /
                    std::pow(num, emu) *
                    std::pow(std::pow(w, 2.0) / (0.5 * C2), 1.0) *
                    std::pow(0.5, emu);
    CHECK(*r2.exact == doctest::Approx(closed).epsilon(1e-8));
  }

  // alpha = 1 exponent equals the short heavy-scale one
  auto r3 = ruin_lm_heavy_bounds(hp, vec1(0.5), kSet1, 1.0, 1.0, 1.5);
  double nu = 1.0 + (1.5 - 1.0) * 2.0 / (2.0 - 1.0);
  CHECK(r3.constants.at("lower_exponent") ==
        doctest::Approx(nu / 1.5).epsilon(1e-14));
}

TEST_CASE("asymptote ordering holds across parameter grids") {
  Eigen::MatrixXd s2(1, 1);
  for (double mu : {0.25, 0.5, 1.0}) {
    for (double level : {0.5, 1.0, 2.0}) {
      auto set = TargetSet::half_line(level);
      for (double var : {0.5, 1.0, 2.0}) {
        s2 << var;
        auto rc = ruin_cramer_bounds(kIid, InnovationModel::gaussian1(var),
                                     set, vec1(mu));
        CHECK(rc.lower <= rc.upper + 1e-12);
        for (double w : {0.6, 0.8, 1.0}) {
          auto rg = ruin_gaussian_bounds(s2, vec1(mu), set, w);
          CHECK(rg.lower <= rg.upper + 1e-12);
          CHECK(rg.upper < 0.0);
        }
      }
      for (double w : {1.0, 1.5, 2.0}) {
        auto hp = HeavyProfile::isotropic(2.0, 0.5);
        auto rh = ruin_heavy_bounds(hp, vec1(mu), set, w);
        CHECK(rh.lower <= rh.upper + 1e-12);
      }
      auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
      auto rl = ruin_lm_bounds(bp, kGauss, vec1(mu), set);
      CHECK(rl.lower <= rl.upper + 1e-9);
      for (double w : {0.8, 1.0, 1.25}) {
        auto rr = ruin_lm_gaussian_bounds(s2, vec1(mu), set, 0.75, 1.0, w);
        CHECK(rr.lower <= rr.upper + 1e-9);
      }
      auto hp1 = HeavyProfile::one_dim(2.0, 0.5, 0.5);
      for (double w : {1.3, 1.7, 2.2}) {
        auto rq = ruin_lm_heavy_bounds(hp1, vec1(mu), set, 0.75, 1.0, w);
        CHECK(rq.lower <= rq.upper + 1e-9);
      }
    }
  }
}

TEST_CASE("deformed conjugate for a non-Gaussian law (nested quadrature)") {
  auto ce = InnovationModel::centered_exponential(1.0);
  MemoryKernel kern(0.75, 1.0);
  auto lam_a = [&](double t) { return deformed_log_mgf(ce, kern, t); };
  auto r = legendre(std::function<double(double)>(lam_a), 1.0);
  CHECK(r.converged);
  CHECK(r.value > 0.0);
  double grid = oracles::grid_conjugate(lam_a, 1.0, 0.0,
                                        0.999 / kern.sup_g(), 400);
  CHECK(r.value == doctest::Approx(grid).epsilon(1e-3));
  // weak duality against direct evaluations
  for (double lam : {0.2, 0.6, 0.9}) {
    CHECK(r.value + lam_a(lam) >= lam * 1.0 - 1e-9);
  }
}

TEST_CASE("envelope bounds from normalized log-MGFs") {
  auto g_iid = [&](long, double t) { return kGauss.log_mgf(t) - 0.5 * t; };
  auto nb = nyrhinen_bounds(g_iid, kSet1);
  CHECK(nb.upper == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(nb.lower == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(nb.t_lower == doctest::Approx(1.0).epsilon(1e-4));

  // ordering against the exact Cramer limit across drifts
  for (double mu : {0.25, 0.5, 1.0}) {
    auto g = [&](long, double t) { return kGauss.log_mgf(t) - mu * t; };
    auto b = nyrhinen_bounds(g, kSet1);
    auto exact = ruin_cramer_bounds(kIid, kGauss, kSet1, vec1(mu));
    REQUIRE(exact.exact.has_value());
    CHECK(b.upper >= *exact.exact - 1e-10);
    CHECK(b.lower <= *exact.exact + 1e-10);
  }

  // degenerate set direction
  auto nb2 = nyrhinen_bounds(g_iid, TargetSet::half_line(-1.0));
  CHECK(nb2.degenerate);

  // no negative g anywhere: hypothesis unverifiable
  auto g0 = [&](long, double t) { return kGauss.log_mgf(t); };
  CHECK_THROWS_AS(nyrhinen_bounds(g0, kSet1), NoNegativeG);
}
