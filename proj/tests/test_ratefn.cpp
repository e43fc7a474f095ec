#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "masim/ratefn.hpp"
#include "oracles.hpp"

using namespace masim;

namespace {
std::function<double(double)> mgf_of(const InnovationModel& m) {
  return [&m](double t) { return m.log_mgf(t); };
}
}  // namespace

TEST_CASE("scalar Legendre transforms against grid search") {
  auto gm = InnovationModel::gaussian1(1.0);
  auto r = legendre(mgf_of(gm), 1.0);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.converged);

  auto ce = InnovationModel::centered_exponential(1.0);
  auto rc = legendre(mgf_of(ce), 1.0);
  CHECK(rc.value == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-10));
  CHECK(rc.maximizer(0) == doctest::Approx(0.5).epsilon(1e-6));
  double grid = oracles::grid_conjugate(mgf_of(ce), 1.0, -3.0, 0.999999);
  CHECK(rc.value == doctest::Approx(grid).epsilon(1e-8));

  // restricted sup attained on the region boundary
  auto rr = legendre(mgf_of(gm), 2.0, Interval{0.0, 1.0});
  CHECK(rr.value == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(rr.maximizer(0) == doctest::Approx(1.0).epsilon(1e-8));

  // whole-line region equals the unrestricted transform
  auto ru = legendre(mgf_of(gm), 1.7, Interval{});
  auto rf = legendre(mgf_of(gm), 1.7);
  CHECK(ru.value == doctest::Approx(rf.value).epsilon(1e-12));

  // value 0 at the mean, nonnegative elsewhere
  CHECK(legendre(mgf_of(gm), 0.0).value == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("Fenchel-Young weak duality on random probes") {
  auto ce = InnovationModel::centered_exponential(1.0);
  CounterRng rng(31, 0);
  for (int k = 0; k < 200; ++k) {
    double x = 4.0 * rng.uniform(k, 0) - 1.0;
    double lam = 0.999 * rng.uniform(k, 1);
    double conj = legendre(mgf_of(ce), x).value;
    CHECK(conj + ce.log_mgf(lam) >= lam * x - 1e-10);
    CHECK(conj >= -1e-12);
  }
}

TEST_CASE("multivariate conjugate of a quadratic recovers the inverse") {
  CounterRng rng(17, 3);
  for (int d = 1; d <= 3; ++d) {
    for (int rep = 0; rep < 4; ++rep) {
      Eigen::MatrixXd B(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          B(a, b) = 2.0 * rng.uniform(100 * d + 10 * rep + a, b) - 1.0;
      Eigen::MatrixXd sigma =
          B * B.transpose() + Eigen::MatrixXd::Identity(d, d) * 0.3;
      auto model = InnovationModel::gaussian(sigma);
      Eigen::VectorXd x(d);
      for (int a = 0; a < d; ++a)
        x(a) = 2.0 * rng.uniform(999 + 10 * rep, a) - 1.0;
      auto r = legendre(model, x);
      double want = 0.5 * x.dot(sigma.llt().solve(x));
      CHECK(r.value == doctest::Approx(want).epsilon(1e-8));
      CHECK(r.converged);
    }
  }
}

TEST_CASE("kernel closed forms and the power integral") {
  MemoryKernel k(0.75, 0.7);
  const double e = 0.25, q = 0.3;
  CHECK(k.g(2.0) ==
        doctest::Approx(0.7 * (std::pow(3.0, e) - std::pow(2.0, e))));
  CHECK(k.g(-3.0) ==
        doctest::Approx(q * (std::pow(3.0, e) - std::pow(2.0, e))));
  CHECK(k.g(-0.5) ==
        doctest::Approx(q * std::pow(0.5, e) + 0.7 * std::pow(0.5, e)));
  CHECK(k.g(0.0) == doctest::Approx(0.7));

  // C_{alpha,beta}: exact 1 at alpha = 1, +inf when alpha beta <= 1
  for (double beta : {1.5, 2.0, 3.0})
    CHECK(kernel_integral(MemoryKernel(1.0, 0.4), beta) == 1.0);
  CHECK(kernel_integral(MemoryKernel(0.6, 1.0), 1.5) == kInf);

  // Monte Carlo oracle with 1e7 samples (body) plus the analytic tail bound
  MemoryKernel k2(0.75, 1.0);
  double C = kernel_integral(k2, 2.0);
  const double B = 400.0;
  auto g2 = [&](double x) { return k2.g(x) * k2.g(x); };
  auto mc = oracles::mc_integral(g2, B, 10000000, 4242);
  // tail beyond B: integrand <= (p(1-alpha))^2 x^{-3/2} envelope
  double tail = 2.0 * 0.0625 * std::pow(B - 1.0, -0.5);
  CHECK(std::abs(C - mc.value) < 3.0 * mc.se + tail);

  // continuity toward the alpha = 1 degeneracy
  double prev_gap = kInf;
  for (double a : {0.9, 0.95, 0.99, 0.995, 0.999}) {
    double gap = std::abs(kernel_integral(MemoryKernel(a, 1.0), 2.0) - 1.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.02);
}

TEST_CASE("deformed log-MGF identities") {
  auto gm = InnovationModel::gaussian1(1.0);
  for (double alpha : {0.6, 0.75, 0.9}) {
    for (double p : {1.0, 0.5}) {
      MemoryKernel kern(alpha, p);
      double C = kernel_integral(kern, 2.0);
      for (double lam : {0.1, 1.0, 10.0}) {
        double v = deformed_log_mgf(gm, kern, lam);
        CHECK(v / (0.5 * lam * lam) == doctest::Approx(C).epsilon(1e-6));
      }
      CHECK(deformed_log_mgf(gm, kern, 0.0) == 0.0);
    }
  }
  // alpha = 1 collapses to the plain log-MGF
  MemoryKernel k1(1.0, 1.0);
  CHECK(deformed_log_mgf(gm, k1, 2.0) == doctest::Approx(2.0));

  // heavy-profile deformation scales by C_{alpha,beta}
  for (double beta : {1.8, 2.5}) {
    MemoryKernel kern(0.8, 0.6);
    double C = kernel_integral(kern, beta);
    double xi = 0.5;
    auto power = [&](double t) { return xi * std::pow(std::abs(t), beta); };
    double got = deformed_transform(power, kern, 2.0);
    double want = C * power(2.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }

  // divergence outside the scaled domain
  auto ce = InnovationModel::centered_exponential(1.0);
  MemoryKernel kern(0.75, 1.0);
  CHECK(deformed_log_mgf(ce, kern, 1.5 / kern.sup_g()) == kInf);
}

TEST_CASE("heavy-profile log-MGF and conjugate") {
  auto gm = InnovationModel::gaussian1(1.0);
  Eigen::VectorXd l1(1);
  l1 << 3.0;
  CHECK(heavy_log_mgf(gm, l1) == doctest::Approx(4.5));
  l1 << 0.0;
  CHECK(heavy_log_mgf(gm, l1) == 0.0);

  HeavyProfile hp;
  hp.beta = 2.0;
  hp.zeta = [](const Eigen::VectorXd& u) {
    return std::abs(u(1)) > 0.5 ? 1.0 : 0.5;
  };
  Eigen::VectorXd e2(2);
  e2 << 0.0, 2.0;
  CHECK(heavy_log_mgf(hp, e2) == doctest::Approx(4.0));

  // conjugate of a quadratic profile: K_2 = 1/2 when zeta = 1/2
  auto iso = HeavyProfile::isotropic(2.0, 0.5);
  Eigen::VectorXd x(1);
  x << 3.0;
  CHECK(heavy_conjugate(iso, x) == doctest::Approx(4.5));  // x^2/2
  x << -2.0;
  CHECK(heavy_conjugate(iso, x) == doctest::Approx(2.0));
  // d=2 isotropic: same as norm-based closed form
  Eigen::VectorXd x2(2);
  x2 << 1.0, 1.0;
  CHECK(heavy_conjugate(iso, x2) ==
        doctest::Approx(x2.squaredNorm() / 2.0).epsilon(1e-6));

  auto bad = InnovationModel::centered_exponential(1.0);
  Eigen::VectorXd l(1);
  l << 1.0;
  CHECK_THROWS_AS(heavy_log_mgf(bad, l), MissingHeavyProfile);
}

TEST_CASE("tilt regions") {
  auto s1 = RegimeSpec::s1();
  auto gm = InnovationModel::gaussian1(1.0);
  auto ce = InnovationModel::centered_exponential(1.0);
  auto iid = CoefficientFamily::finite_lag({{0, 1.0}});
  auto ma = CoefficientFamily::finite_lag({{0, 0.5}, {1, 0.5}});

  auto pg = pi_region(iid, gm, s1);
  CHECK(pg.decided);
  CHECK(pg.lambda_max == kInf);

  auto p1 = pi_region(iid, ce, s1);
  CHECK(p1.decided);
  CHECK(p1.lambda_max == doctest::Approx(1.0).epsilon(1e-9));

  auto p2 = pi_region(ma, ce, s1);
  CHECK(p2.decided);
  CHECK(p2.lambda_max == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p2.margin == doctest::Approx(0.0).scale(1.0));

  auto geo = CoefficientFamily::geometric(0.5, 1.0, true);
  auto p3 = pi_region(geo, ce, s1);
  CHECK(p3.decided);
  CHECK(p3.lambda_max == doctest::Approx(1.0).epsilon(1e-6));

  // long-memory variant: one-sided balanced power peaks at the full window
  auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
  auto p4 = pi_region(bp, ce, RegimeSpec::r1(bp));
  CHECK(p4.decided);
  CHECK(p4.lambda_max == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("finite-n normalized log-MGF sums") {
  auto gm = InnovationModel::gaussian1(1.0);
  auto iid = CoefficientFamily::finite_lag({{0, 1.0}});
  auto s2 = RegimeSpec::s2();
  CHECK(finite_n_mgf_sum(iid, gm, s2, 1.0, 50) == doctest::Approx(0.5));

  // finite-lag closed form: 2 Lambda(t/2) + (n-1) Lambda(t), normalized
  auto ma = CoefficientFamily::finite_lag({{0, 0.5}, {1, 0.5}});
  long n = 100;
  double t = 0.8;
  double want = (2.0 * gm.log_mgf(t / 2.0) + (n - 1) * gm.log_mgf(t)) / n;
  CHECK(finite_n_mgf_sum(ma, gm, s2, t, n) ==
        doctest::Approx(want).epsilon(1e-13));

  // truncation irrelevance: the window-doubling gap is the integrable
  // envelope tail (n / 2 Psi_n^2) int_{n^2}^{4n^2} x^{-2 alpha} dx, about
  // 1.4e-3 at n = 1e3 for alpha = 3/4, and shrinks like Psi_n^{-2}.
  auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
  auto r2 = RegimeSpec::r2(bp);
  double v1 = finite_n_mgf_sum(bp, gm, r2, 1.0, 1000, 1000L * 1000L);
  double v2 = finite_n_mgf_sum(bp, gm, r2, 1.0, 1000, 4L * 1000L * 1000L);
  double psi2 = bp.psi_prefix(1000) * bp.psi_prefix(1000);
  CHECK(std::abs(v1 - v2) < 1.0 / psi2);
  double w1 = finite_n_mgf_sum(bp, gm, r2, 1.0, 4000, 4000L * 4000L);
  double w2 = finite_n_mgf_sum(bp, gm, r2, 1.0, 4000, 4L * 4000L * 4000L);
  CHECK(std::abs(w1 - w2) < std::abs(v1 - v2));

  // serial and parallel produce the same bits
  double sp = finite_n_mgf_sum(bp, gm, r2, 1.0, 500, -1, Exec::Parallel);
  double ss = finite_n_mgf_sum(bp, gm, r2, 1.0, 500, -1, Exec::Serial);
  CHECK(sp == ss);

  // divergent summand reported
  auto ce = InnovationModel::centered_exponential(1.0);
  CHECK_THROWS_AS(finite_n_mgf_sum(iid, ce, s2, 2.0, 10), DivergentTerm);
}
