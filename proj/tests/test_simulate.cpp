#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <cstdio>

#include "masim/io.hpp"
#include "masim/simulate.hpp"
#include "oracles.hpp"

using namespace masim;

namespace {
const auto kGauss = InnovationModel::gaussian1(1.0);
const auto kIid = CoefficientFamily::finite_lag({{0, 1.0}});
}  // namespace

TEST_CASE("iid embedding passes innovations through unchanged") {
  PathConfig cfg{kIid, kGauss, 64, 0, 5, 9, Regime::S1, 0.0};
  Path p = sample_path(cfg);
  CounterRng rng(5, 9);
  for (long n = 1; n <= 64; ++n)
    CHECK(p.x[static_cast<size_t>(n - 1)] == kGauss.sample(rng, n));
  CHECK(p.tau_err == 0.0);
  // prefix sums rebuild the increments to rounding accuracy
  for (long n = 1; n <= 64; ++n)
    CHECK(p.s[static_cast<size_t>(n)] - p.s[static_cast<size_t>(n - 1)] ==
          doctest::Approx(p.x[static_cast<size_t>(n - 1)])
              .epsilon(1e-13)
              .scale(1.0 + std::abs(p.s[static_cast<size_t>(n)])));
}

TEST_CASE("two-tap average checked positionally on a deterministic stream") {
  // alternating +-1 innovations through the (1/2, 1/2) window average to 0
  auto ma = CoefficientFamily::finite_lag({{0, 0.5}, {1, 0.5}});
  std::vector<double> z;
  long L = 1, m = 5;
  for (long j = 1 - L; j <= m + L; ++j) z.push_back(j % 2 == 0 ? 1.0 : -1.0);
  auto x = convolve_reference(ma, L, z, m);
  for (long n = 1; n <= m; ++n) CHECK(x[static_cast<size_t>(n - 1)] == 0.0);

  // and a hand convolution of a ramp
  std::vector<double> zr = {0, 1, 2, 3, 4, 5, 6};
  auto xr = convolve_reference(ma, 1, zr, 5);
  for (long n = 1; n <= 5; ++n)
    CHECK(xr[static_cast<size_t>(n - 1)] ==
          doctest::Approx(0.5 * (zr[static_cast<size_t>(n)] +
                                 zr[static_cast<size_t>(n - 1)])));
}

TEST_CASE("transform-based convolution agrees with the direct reference") {
  auto bp = CoefficientFamily::balanced_power(0.75, 0.6);
  PathConfig cfg{bp, kGauss, 9000, 4000, 11, 5, Regime::R3, 0.0};
  Path p = sample_path(cfg);  // cost pushes this through the FFT route
  CounterRng rng(11, 5);
  std::vector<double> z;
  for (long j = 1 - 4000; j <= 9000 + 4000; ++j)
    z.push_back(kGauss.sample(rng, j));
  auto xref = convolve_reference(bp, 4000, z, 9000);
  double scale = 0.0;
  for (double v : xref) scale = std::max(scale, std::abs(v));
  for (long n = 0; n < 9000; ++n)
    CHECK(std::abs(p.x[static_cast<size_t>(n)] -
                   xref[static_cast<size_t>(n)]) < 1e-12 * (1.0 + scale));
}

TEST_CASE("reproducibility under thread counts, and serial == parallel") {
  auto bp = CoefficientFamily::balanced_power(0.8, 1.0);
  PathConfig cfg{bp, kGauss, 4000, 500, 42, 0, Regime::R2, 0.0};
  omp_set_num_threads(1);
  auto a = sample_path_batch(cfg, 12, Exec::Parallel);
  omp_set_num_threads(8);
  auto b = sample_path_batch(cfg, 12, Exec::Parallel);
  auto c = sample_path_batch(cfg, 12, Exec::Serial);
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].x == b[k].x);
    CHECK(a[k].x == c[k].x);
  }
}

TEST_CASE("truncation diagnostics") {
  auto geo = CoefficientFamily::geometric(0.5, 1.0, true);
  PathConfig cfg{geo, kGauss, 100, 12, 1, 0, Regime::S1, 0.0};
  Path p = sample_path(cfg);
  CHECK(p.tau_err == doctest::Approx(geo.abs_tail(12)));
  // auto truncation drives the tail below 1e-8
  PathConfig cauto{geo, kGauss, 100, 0, 1, 0, Regime::S1, 0.0};
  CHECK(sample_path(cauto).tau_err < 1e-8);

  auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
  PathConfig cl{bp, kGauss, 1000, 5000, 1, 0, Regime::R2, 0.0};
  Path pl = sample_path(cl);
  double want = (bp.psi_prefix(6000) - bp.psi_prefix(5000)) /
                bp.psi_prefix(1000);
  CHECK(pl.tau_err == doctest::Approx(want));
}

TEST_CASE("exponential tilting of the innovation laws") {
  // theta = 0 reproduces the plain path bit for bit
  auto ma = CoefficientFamily::finite_lag({{0, 0.5}, {1, 0.5}});
  PathConfig cfg{ma, kGauss, 50, 0, 3, 4, Regime::S1, 0.0};
  auto [p0, llr0] = tilted_sample_path(cfg, 0.0);
  Path pp = sample_path(cfg);
  CHECK(p0.x == pp.x);
  CHECK(llr0 == 0.0);

  // tilted Gaussian innovations are mean-theta Gaussians
  {
    CounterRng rng(77, 0);
    const long n = 1000000;
    double s = 0.0;
    for (long k = 0; k < n; ++k)
      s += kGauss.sample_tilted(rng, k, 1.0);
    double mean = s / n;
    CHECK(std::abs(mean - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
  // tilted exponential: E_theta[Z] = grad Lambda(theta) = 1/(1-theta) - 1
  {
    auto ce = InnovationModel::centered_exponential(1.0);
    CounterRng rng(78, 0);
    const long n = 1000000;
    double s = 0.0;
    for (long k = 0; k < n; ++k) s += ce.sample_tilted(rng, k, 0.5);
    double mean = s / n;
    double want = ce.dlog_mgf(0.5);
    CHECK(want == doctest::Approx(1.0));
    CHECK(std::abs(mean - want) <
          4.0 * std::sqrt(ce.variance()) / std::sqrt(0.25 * n));
  }
  // bounded-uniform and discrete tilts satisfy the same moment identity
  for (auto model : {InnovationModel::bounded_uniform(1.5),
                     InnovationModel::two_sided_discrete(
                         {{1.0, 0.5}, {-1.0, 0.5}})}) {
    CounterRng rng(79, 0);
    const long n = 400000;
    double s = 0.0;
    for (long k = 0; k < n; ++k) s += model.sample_tilted(rng, k, 0.7);
    CHECK(std::abs(s / n - model.dlog_mgf(0.7)) < 0.01);
  }

  auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
  PathConfig clong{bp, kGauss, 10, 0, 1, 0, Regime::R2, 0.0};
  CHECK_THROWS_AS(tilted_sample_path(clong, 0.5), UnsupportedFamily);
}

TEST_CASE("tilted reweighting is unbiased for path functionals") {
  // f = indicator of S_10 > 2 under theta vs plain Monte Carlo
  auto ma = CoefficientFamily::finite_lag({{0, 0.5}, {1, 0.5}});
  const long n_paths = 100000;
  const double theta = 0.8;
  double tilted = 0.0, tilted2 = 0.0, plain = 0.0;
  for (long k = 0; k < n_paths; ++k) {
    PathConfig cfg{ma, kGauss, 10, 0, 91, static_cast<uint64_t>(k),
                   Regime::S1, 0.0};
    auto [p, llr] = tilted_sample_path(cfg, theta);
    double v = (p.s[10] > 2.0 ? 1.0 : 0.0) * std::exp(-llr);
    tilted += v;
    tilted2 += v * v;
    PathConfig cfg2{ma, kGauss, 10, 0, 92, static_cast<uint64_t>(k),
                    Regime::S1, 0.0};
    Path q = sample_path(cfg2);
    plain += q.s[10] > 2.0 ? 1.0 : 0.0;
  }
  double mt = tilted / n_paths;
  double mp = plain / n_paths;
  double vt = (tilted2 / n_paths - mt * mt) / n_paths;
  double vp = mp * (1.0 - mp) / n_paths;
  CHECK(std::abs(mt - mp) < 4.0 * std::sqrt(vt + vp));
}

TEST_CASE("empirical variance matches sigma^2 sum phi_i^2") {
  auto geo = CoefficientFamily::geometric(0.6, 1.0, true);
  PathConfig cfg{geo, kGauss, 1000000, 0, 13, 2, Regime::S1, 0.0};
  Path p = sample_path(cfg);
  double s2 = 0.0;
  for (double v : p.x) s2 += v * v;
  s2 /= static_cast<double>(p.x.size());
  CHECK(s2 == doctest::Approx(geo.sum_sq()).epsilon(0.01));
}

TEST_CASE("raw path dump round-trips") {
  PathConfig cfg{kIid, kGauss, 37, 0, 123, 7, Regime::S1, 0.0};
  Path p = sample_path(cfg);
  std::string file = "test_path.mapath";
  write_path_dump(p, file);
  PathDump d = read_path_dump(file);
  CHECK(d.m == 37);
  CHECK(d.seed == 123);
  CHECK(d.L == static_cast<uint64_t>(p.truncation));
  for (size_t i = 0; i < d.x.size(); ++i) CHECK(d.x[i] == p.x[i]);
  std::remove(file.c_str());
}

TEST_CASE("csv formatting is locale-free and stable") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1e308) == "1e+308");
  CHECK(format_double(-kInf) == "-inf");
  CHECK(format_double(1.0 / 3.0) == "0.333333333333");
}
