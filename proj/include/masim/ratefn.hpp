#pragma once

#include <functional>
#include <string>

#include "masim/model.hpp"

namespace masim {

struct ConjugateResult {
  double value = 0.0;
  Eigen::VectorXd maximizer;
  bool converged = false;
  int iterations = 0;
};

/// Legendre transform sup_{lambda} {lambda x - f(lambda)} of a convex f on
/// the line, f possibly +inf outside its effective domain. `region`
/// restricts the supremum to a sub-interval (used for the Pi-restricted
/// conjugates); the unrestricted transform passes the whole line.
ConjugateResult legendre(const std::function<double(double)>& f, double x,
                         Interval region = {}, double bracket_tol = 1e-12);

/// Multivariate transform via damped Newton on grad f(lambda) = x with
/// domain backtracking (d <= 3 exercised).
ConjugateResult legendre(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, double grad_tol = 1e-10);

/// Lambda* for an innovation model (any dimension).
ConjugateResult legendre(const InnovationModel& model,
                         const Eigen::VectorXd& x);

/// The window-average kernel g driving the long-memory deformation:
/// g(x) = (1-alpha) int_x^{x+1} |y|^{-alpha} (p 1{y>=0} + q 1{y<0}) dy,
/// in closed form; for alpha = 1 it degenerates to the indicator of (-1,0).
class MemoryKernel {
 public:
  MemoryKernel(double alpha, double p);
  double alpha() const { return alpha_; }
  double p() const { return p_; }
  double g(double x) const;
  double sup_g() const;

 private:
  double alpha_;
  double p_;
  double sup_g_;
};

/// C_{alpha,beta} = int g(x)^beta dx; exactly 1 for alpha = 1, +inf when
/// alpha*beta <= 1 (non-integrable tail).
double kernel_integral(const MemoryKernel& kern, double beta);

/// The memory deformation f_alpha(lambda) = int f(lambda g(x)) dx of a
/// nonnegative convex f with f(0) = 0 (alpha < 1; f itself for alpha = 1).
double deformed_transform(const std::function<double(double)>& f,
                          const MemoryKernel& kern, double lambda);

/// Lambda_alpha for an innovation model. Returns +inf when the integrand is
/// infinite on a set of positive measure.
double deformed_log_mgf(const InnovationModel& model, const MemoryKernel& kern,
                        double lambda);

/// Lambda^h(lambda) = zeta(lambda/||lambda||) ||lambda||^beta.
double heavy_log_mgf(const HeavyProfile& hp, const Eigen::VectorXd& lambda);
double heavy_log_mgf(const InnovationModel& model,
                     const Eigen::VectorXd& lambda);
/// (Lambda^h)^* by direction/radius decomposition (d <= 3).
double heavy_conjugate(const HeavyProfile& hp, const Eigen::VectorXd& x);

/// Numerically certified tilt region Pi (or Pi_alpha under R1): the interval
/// of lambda with uniformly finite coefficient-weighted log-MGFs. `decided`
/// is false when the finite-n scan plus the tail certificate cannot pin the
/// endpoint within the margin; that outcome is reported, never guessed.
struct TiltRegion {
  bool decided = false;
  double lambda_max = 0.0;  // sup{lambda in Pi}
  double lambda_min = 0.0;  // inf{lambda in Pi}
  double margin = 0.0;      // gap between certified-in and certified-out
  std::string reason;
};
TiltRegion pi_region(const CoefficientFamily& fam, const InnovationModel& model,
                     const RegimeSpec& reg, long n_max = 10000);

/// Finite-n normalized log-MGF sum (1/b_n) sum_{|i|<=k_n}
/// Lambda((b_n/a_n) lambda phi_{i,n}); k_n < 0 selects the default n^2.
/// Converges to Lambda_alpha (R scenarios) or Lambda (S scenarios).
double finite_n_mgf_sum(const CoefficientFamily& fam,
                        const InnovationModel& model, const RegimeSpec& reg,
                        double lambda, long n, long k_n = -1,
                        Exec exec = Exec::Parallel);

}  // namespace masim
