#pragma once

#include <array>
#include <vector>

#include "masim/limits.hpp"
#include "masim/simulate.hpp"

namespace masim {

struct RuinProblem {
  CoefficientFamily fam;
  InnovationModel model;
  RegimeSpec reg;
  double mu = 0.5;
  TargetSet set = TargetSet::half_line(1.0);
};

enum class RuinMethod { Plain, Tilted };

struct RuinEstimate {
  double u = 0.0;
  double rho_hat = 0.0;
  double se = 0.0;
  RuinMethod method = RuinMethod::Plain;
  long horizon = 0;
  double tail_bound = 0.0;   // bound on the mass beyond the horizon
  bool tail_certified = false;
  std::array<double, 3> hit_time_quantiles{0.0, 0.0, 0.0};  // 25/50/75%
  uint64_t seed = 0;
  long n_paths = 0;
  long n_hits = 0;
  std::string notes;
};

/// Plain Monte Carlo estimate of rho(u) = P[Y_n in uA for some n >= 1] with
/// horizon N(u) = M a^{<-}(u). Refuses to run without a drift certificate
/// (a tilt with negative limiting normalized log-MGF), since rho could then
/// be 1. The mass beyond the horizon is bounded by an explicit Chernoff sum
/// and reported with the estimate.
RuinEstimate ruin_mc(const RuinProblem& prob, double u, long n_paths,
                     int horizon_multiplier = 20, uint64_t seed = 1,
                     Exec exec = Exec::Parallel);

/// Importance sampling by exponential tilting at the root of
/// Lambda(theta) = theta mu, stopped at the first hit. Unbiased via the
/// stopped likelihood ratio. i.i.d./FiniteLag families only. Falls back to
/// plain Monte Carlo (with a note) when the tilt root cannot be bracketed
/// for a valid drift.
RuinEstimate ruin_is(const RuinProblem& prob, double u, long n_paths,
                     uint64_t seed = 1, Exec exec = Exec::Parallel,
                     int horizon_multiplier = 200);

/// Normalized log-MGFs g_n(t) = n^{-1}[ sum_i Lambda(t phi_{i,n}) - n t mu ]
/// computed analytically, with the window-truncation slack, a Richardson
/// extrapolation of the limit and a central-difference derivative.
struct GEvaluation {
  std::vector<std::pair<long, double>> values;  // (n, g_n(t))
  double g = 0.0;
  double dg = 0.0;
  double slack = 0.0;
};
GEvaluation empirical_g(const RuinProblem& prob, double t,
                        const std::vector<long>& n_grid);

/// Least-squares fit of log rho(u) against the theory regressor
/// b_{a^{<-}(u)} (or u^power when `regressor_power` is finite), with the
/// theory bracket attached.
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double theory_lower = -kInf;
  double theory_upper = 0.0;
  bool inside = false;
  long n_used = 0;
};
DecayFit ruin_decay_fit(const std::vector<RuinEstimate>& estimates,
                        const RegimeSpec& reg, double theory_lower,
                        double theory_upper,
                        double regressor_power = kInf,
                        double max_rel_se = 0.3);

}  // namespace masim
