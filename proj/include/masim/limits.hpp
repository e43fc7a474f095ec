#pragma once

#include <map>
#include <optional>
#include <string>

#include "masim/model.hpp"
#include "masim/ratefn.hpp"

namespace masim {

/// Raised when the tilt-region scan could not certify its endpoint and a
/// dependent bound would be a guess.
class UndecidablePi : public Error {
 public:
  explicit UndecidablePi(const std::string& msg)
      : Error("UndecidablePi: " + msg) {}
};

class OutOfRange : public Error {
 public:
  explicit OutOfRange(const std::string& msg) : Error("OutOfRange: " + msg) {}
};

/// Lower/upper growth rates for long strange segments: I_* from the upper
/// rate function over the closure, I^* from the lower rate function over the
/// interior (with the tilt-restricted feasibility scan under S1/R1).
struct RateBounds {
  double lower = 0.0;  // I_*
  double upper = 0.0;  // I^*
  Regime tag = Regime::S2;
  double lambda_star = kInf;      // S1/R1 only
  double theta_threshold = 0.0;   // smallest feasible eta (S1/R1)
  std::string notes;
};

RateBounds segment_rate_bounds(const CoefficientFamily& fam,
                               const InnovationModel& model,
                               const RegimeSpec& reg, const TargetSet& set);

/// Exponent theta of the regularly varying factor Theta in R_m ~
/// Theta(log m): growth-rate table for short/long memory as a function of
/// the normalization exponent omega. +inf encodes growth faster than any
/// power of log m.
double growth_theta(Memory memory, double omega, double alpha, double beta);

/// Exponent theta in -log rho(u) ~ u^theta: ruin-decay table. theta = 0
/// encodes decay slower than any power of u.
double decay_theta(Memory memory, double omega, double alpha, double beta);

/// Logarithmic ruin-probability asymptote: certified lower/upper bounds on
/// the normalized limit, the exact limit when the explicit-form hypotheses
/// verify numerically, and the intermediate constants used.
struct RuinAsymptote {
  double lower = -kInf;
  double upper = 0.0;
  std::optional<double> exact;
  std::map<std::string, double> constants;
  bool empty_feasible = false;
  std::string notes;
};

/// Cramer scenario (S1, a_n = n): bounds in the (1/u) log rho(u) scale and
/// the explicit -w gamma* mu limit when its hypotheses hold.
RuinAsymptote ruin_cramer_bounds(const CoefficientFamily& fam,
                                 const InnovationModel& model,
                                 const TargetSet& set,
                                 const Eigen::VectorXd& mu);

/// Gaussian moderate-deviation scenario (S3), scale 1/b_{a^<-(u)}.
RuinAsymptote ruin_gaussian_bounds(const Eigen::MatrixXd& sigma,
                                   const Eigen::VectorXd& mu,
                                   const TargetSet& set, double omega);

/// Huge-deviation scenario (S4) with balanced regular varying Lambda.
RuinAsymptote ruin_heavy_bounds(const HeavyProfile& hp,
                                const Eigen::VectorXd& mu,
                                const TargetSet& set, double omega);

/// Long-memory scenario R2 (a_n = n Psi_n), scale 1/a^<-(u).
RuinAsymptote ruin_lm_bounds(const CoefficientFamily& fam,
                             const InnovationModel& model,
                             const Eigen::VectorXd& mu, const TargetSet& set);

/// Long-memory Gaussian scenario R3, Sigma the innovation covariance.
RuinAsymptote ruin_lm_gaussian_bounds(const Eigen::MatrixXd& sigma,
                                      const Eigen::VectorXd& mu,
                                      const TargetSet& set, double alpha,
                                      double p, double omega);

/// Long-memory huge-deviation scenario R4.
RuinAsymptote ruin_lm_heavy_bounds(const HeavyProfile& hp,
                                   const Eigen::VectorXd& mu,
                                   const TargetSet& set, double alpha,
                                   double p, double omega);

/// Generic one-dimensional ruin envelope from the normalized log-MGFs
/// g_n(t) = n^{-1} log E exp(t Y_n): upper bound from the certified
/// exponential-moment set, lower bound from the tilted local limit.
struct EnvelopeBounds {
  double upper = 0.0;
  double lower = -kInf;
  double t_upper = 0.0;  // certified t attaining the upper bound
  double t_lower = 0.0;  // t attaining the lower bound
  bool degenerate = false;
};

EnvelopeBounds nyrhinen_bounds(
    const std::function<double(long, double)>& g_n, const TargetSet& set,
    Interval t_box = {1e-6, 1e3}, long n_max = 10000);

}  // namespace masim
