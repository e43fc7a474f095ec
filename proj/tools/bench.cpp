// Benchmark comparing the OpenMP batch kernels against their serial
// reference twins. Also asserts the two produce identical bits.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "masim/ratefn.hpp"
#include "masim/ruin.hpp"
#include "masim/segments.hpp"

using namespace masim;

namespace {

double time_of(const std::function<void()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(const std::string& name, double ts, double tp, bool equal) {
  std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n",
              name.c_str(), ts, tp, ts / tp,
              equal ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", omp_get_max_threads());
  auto gm = InnovationModel::gaussian1(1.0);
  auto iid = CoefficientFamily::finite_lag({{0, 1.0}});
  auto bp = CoefficientFamily::balanced_power(0.75, 1.0);
  auto A = TargetSet::half_line(1.0);

  {
    PathConfig cfg{bp, gm, 20000, 2000, 7, 0, Regime::R3, 0.5};
    std::vector<Path> a, b;
    double tp = time_of([&] { a = sample_path_batch(cfg, 48, Exec::Parallel); });
    double ts = time_of([&] { b = sample_path_batch(cfg, 48, Exec::Serial); });
    bool eq = true;
    for (size_t k = 0; k < a.size(); ++k) eq = eq && a[k].x == b[k].x;
    report("path batch (long memory)", ts, tp, eq);
  }
  {
    PathConfig proto{iid, gm, 200000, 0, 11, 0, Regime::S2, 0.0};
    std::vector<GrowthRow> a, b;
    double tp = time_of([&] {
      a = growth_statistic(proto, 16, A, RegimeSpec::s2(), {200000},
                           Exec::Parallel);
    });
    double ts = time_of([&] {
      b = growth_statistic(proto, 16, A, RegimeSpec::s2(), {200000},
                           Exec::Serial);
    });
    report("growth statistic", ts, tp,
           a[0].mean_stat == b[0].mean_stat && a[0].sd_stat == b[0].sd_stat);
  }
  {
    RuinProblem prob{iid, gm, RegimeSpec::s1(), 0.5, A};
    RuinEstimate a, b;
    double tp = time_of(
        [&] { a = ruin_mc(prob, 4.0, 40000, 20, 3, Exec::Parallel); });
    double ts =
        time_of([&] { b = ruin_mc(prob, 4.0, 40000, 20, 3, Exec::Serial); });
    report("ruin plain MC", ts, tp,
           a.rho_hat == b.rho_hat && a.se == b.se);
  }
  {
    RuinProblem prob{iid, gm, RegimeSpec::s1(), 0.5, A};
    RuinEstimate a, b;
    double tp = time_of(
        [&] { a = ruin_is(prob, 8.0, 100000, 5, Exec::Parallel); });
    double ts =
        time_of([&] { b = ruin_is(prob, 8.0, 100000, 5, Exec::Serial); });
    report("ruin tilted MC", ts, tp, a.rho_hat == b.rho_hat && a.se == b.se);
  }
  {
    auto r2 = RegimeSpec::r2(bp);
    double a = 0, b = 0;
    double tp = time_of([&] {
      a = finite_n_mgf_sum(bp, gm, r2, 1.0, 3000, -1, Exec::Parallel);
    });
    double ts = time_of([&] {
      b = finite_n_mgf_sum(bp, gm, r2, 1.0, 3000, -1, Exec::Serial);
    });
    report("normalized log-MGF sum", ts, tp, a == b);
  }
  return 0;
}
