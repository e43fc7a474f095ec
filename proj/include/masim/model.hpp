#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "masim/common.hpp"
#include "masim/rng.hpp"

namespace masim {

enum class Memory { Short, Long };

/// Prefix sums of k^(-e) * (log(k+e_const))^d with a cached head and an
/// Euler-Maclaurin continuation for large arguments (pure power only).
class PowerPrefix {
 public:
  PowerPrefix(double exponent, double log_power, long cache_size);
  double psi(long k) const;    // k-th term, k >= 1
  double prefix(long n) const; // sum of terms 1..n, 0 for n <= 0
  long cache_size() const { return static_cast<long>(cache_.size()) - 1; }

 private:
  double exponent_;
  double log_power_;
  double zeta_;  // limiting constant in the Euler-Maclaurin expansion
  std::vector<double> cache_;  // cache_[n] = prefix(n)
};

enum class FamilyKind { FiniteLag, Geometric, PowerSummable, BalancedPower };

/// Two-sided moving-average coefficient sequence (phi_i). Short-memory kinds
/// are absolutely summable; BalancedPower has the regularly varying envelope
/// psi(n) = scale * n^(-alpha) * log(n+e)^delta with phi_n ~ p psi(n),
/// phi_{-n} ~ (1-p) psi(n) and a divergent absolute sum.
class CoefficientFamily {
 public:
  static CoefficientFamily finite_lag(
      std::vector<std::pair<long, double>> taps, bool normalized = false);
  static CoefficientFamily geometric(double ratio, double scale = 1.0,
                                     bool normalized = false);
  static CoefficientFamily power_summable(double exponent, double scale = 1.0,
                                          bool normalized = false);
  static CoefficientFamily balanced_power(double alpha, double p,
                                          double scale = 1.0,
                                          double log_power = 0.0);

  FamilyKind kind() const { return kind_; }
  Memory memory() const {
    return kind_ == FamilyKind::BalancedPower ? Memory::Long : Memory::Short;
  }
  bool normalized() const { return normalized_; }

  double phi(long i) const;
  /// phi_{i,n} = phi_{i+1} + ... + phi_{i+n}.
  double partial_sum(long i, long n) const;

  // Long-memory envelope; psi(n) and Psi_n = sum_{k<=n} psi(k).
  double psi(long n) const;
  double psi_prefix(long n) const;

  double sum() const;           // sum of phi_i; throws for long memory
  double abs_sum() const;       // sum |phi_i|; +inf for long memory
  double positive_sum() const;  // sum of positive parts (short memory)
  double sum_sq() const;        // sum phi_i^2 (finite for every kind)
  /// sum_{|i| > K} |phi_i| (short memory, closed form).
  double abs_tail(long K) const;

  /// Exact range of phi_{i,n} over all windows with n <= n_max (short
  /// memory). For FiniteLag the range over *all* n is already attained at
  /// n <= span+1, so the certificate margin is zero.
  struct WindowRange {
    double lo = 0.0;
    double hi = 0.0;
    double hi_certified = 0.0;  // sound upper bound over all (i, n)
    double lo_certified = 0.0;  // sound lower bound over all (i, n)
  };
  WindowRange window_range(long n_max) const;

  double alpha() const { return alpha_; }
  double p() const { return p_; }
  double scale() const { return scale_; }
  double log_power() const { return log_power_; }
  double ratio() const { return ratio_; }
  const std::vector<std::pair<long, double>>& taps() const { return taps_; }
  long min_support() const { return min_support_; }
  long max_support() const { return max_support_; }

  /// Smallest lag L with sum_{|i|>L} |phi_i| < tol (short memory).
  long default_truncation(double tol = 1e-8) const;

 private:
  CoefficientFamily() = default;

  FamilyKind kind_ = FamilyKind::FiniteLag;
  bool normalized_ = false;
  std::vector<std::pair<long, double>> taps_;  // FiniteLag
  double ratio_ = 0.0;                         // Geometric
  double exponent_ = 0.0;                      // PowerSummable
  double alpha_ = 0.0;                         // BalancedPower
  double p_ = 0.0;
  double scale_ = 1.0;
  double log_power_ = 0.0;
  long min_support_ = 0;
  long max_support_ = 0;
  std::shared_ptr<const PowerPrefix> prefix_;  // PowerSummable/BalancedPower
};

/// Balanced-regular-variation profile of a log-MGF: Lambda(t lambda_t) /
/// tau(t) -> zeta(lambda) with tau(t) = t^beta (constants folded into zeta).
struct HeavyProfile {
  double beta = 2.0;
  std::function<double(const Eigen::VectorXd&)> zeta;  // on the unit sphere

  static HeavyProfile isotropic(double beta, double a);
  /// d=1 profile with zeta(+1) = xi_plus, zeta(-1) = xi_minus.
  static HeavyProfile one_dim(double beta, double xi_plus, double xi_minus);
};

enum class Law {
  Gaussian,
  CenteredExponential,
  CenteredGamma,
  BoundedUniform,
  TwoSidedDiscrete
};

/// Centered innovation law together with its log-MGF Lambda, gradient,
/// finiteness domain and (when Lambda is balanced regular varying) the
/// heavy profile. All laws are univariate except Gaussian.
class InnovationModel {
 public:
  static InnovationModel gaussian(Eigen::MatrixXd sigma);
  static InnovationModel gaussian1(double variance);
  static InnovationModel centered_exponential(double rate);
  static InnovationModel centered_gamma(double shape, double rate);
  static InnovationModel bounded_uniform(double half_width);
  static InnovationModel two_sided_discrete(
      std::vector<std::pair<double, double>> atoms_weights);

  Law law() const { return law_; }
  int dim() const { return dim_; }

  double log_mgf(double t) const;  // d = 1
  double log_mgf(const Eigen::VectorXd& t) const;
  double dlog_mgf(double t) const;  // d = 1
  Eigen::VectorXd grad_log_mgf(const Eigen::VectorXd& t) const;

  /// Finiteness domain of Lambda (d=1); Gaussian/BoundedUniform/Discrete
  /// have the whole line.
  Interval mgf_domain() const;
  bool mgf_everywhere_finite() const;

  double variance() const;  // d = 1
  Eigen::MatrixXd covariance() const;
  bool unbounded_above() const;

  std::optional<HeavyProfile> heavy_profile() const;
  InnovationModel with_heavy_profile(HeavyProfile hp) const;

  // Sampling, d = 1. `idx` addresses the innovation, lanes are consumed
  // internally for rejection steps.
  double sample(const CounterRng& rng, int64_t idx) const;
  /// Draw from the exponentially tilted law dP_theta/dP = exp(theta z -
  /// Lambda(theta)); theta must be interior to the domain.
  double sample_tilted(const CounterRng& rng, int64_t idx, double theta) const;

 private:
  InnovationModel() = default;

  Law law_ = Law::Gaussian;
  int dim_ = 1;
  double variance_ = 1.0;    // Gaussian d=1
  Eigen::MatrixXd sigma_;    // Gaussian
  double rate_ = 1.0;        // exponential / gamma
  double shape_ = 1.0;       // gamma
  double half_width_ = 1.0;  // bounded uniform
  std::vector<std::pair<double, double>> atoms_;  // discrete
  std::optional<HeavyProfile> heavy_;
};

/// Target set A: an open half-line (y, inf) in d=1 or an open half-space
/// {x : v.x > level}. The shapes for which Condition A and the support
/// infimum have closed forms.
class TargetSet {
 public:
  static TargetSet half_line(double y);
  static TargetSet half_space(Eigen::VectorXd v, double level);

  int dim() const { return static_cast<int>(v_.size()); }
  double level() const { return level_; }
  const Eigen::VectorXd& direction() const { return v_; }
  bool is_closed() const { return closed_; }
  /// Closed variant (membership uses >=); for sensitivity tests only.
  TargetSet closed_variant() const;

  bool contains(double x) const;
  bool contains(const Eigen::VectorXd& x) const;

  /// inf_{gamma in A} t.gamma: equals kappa*level when t = kappa v with
  /// kappa > 0, and -inf otherwise.
  double support_inf(const Eigen::VectorXd& t) const;
  double support_inf(double t) const;

  /// A(eta) = {x : d(x, A^c) > eta} = {v.x > level + eta ||v||}.
  TargetSet shrink(double eta) const;

  struct ConditionA {
    bool holds = false;
    Eigen::VectorXd witness;
  };
  /// Condition A: some t with t.mu > 0 and inf_A t.gamma > 0, and A closed
  /// under x -> x + rho mu and x -> (1+rho) x. For half-spaces this reduces
  /// to v.mu > 0 and level > 0; the witness is v.
  ConditionA condition_a(const Eigen::VectorXd& mu) const;
  ConditionA condition_a(double mu) const;

 private:
  TargetSet() = default;
  Eigen::VectorXd v_;
  double level_ = 0.0;
  bool closed_ = false;
};

enum class Regime { S1, S2, S3, S4, R1, R2, R3, R4 };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);

/// One of the eight normalization scenarios: the normalizing sequence a_n,
/// the large-deviation speed b_n, and for the huge-deviation scenarios the
/// auxiliary sequence c_n solving tau(c)/c <= a_n/n (tau(t) = t^beta).
class RegimeSpec {
 public:
  static RegimeSpec s1();
  static RegimeSpec s2();
  static RegimeSpec s3(double omega);
  static RegimeSpec s4(double omega, double beta);
  static RegimeSpec r1(CoefficientFamily fam);
  static RegimeSpec r2(CoefficientFamily fam);
  static RegimeSpec r3(double omega, CoefficientFamily fam);
  static RegimeSpec r4(double omega, double beta, CoefficientFamily fam);

  Regime tag() const { return tag_; }
  double omega() const { return omega_; }
  double beta() const { return beta_; }
  const CoefficientFamily& family() const;
  bool long_memory() const { return tag_ >= Regime::R1; }

  double a(long n) const;
  /// For R3/R4 the exact representative a_n^2/(n Psi_n^2) (resp. the
  /// c_n-based form) dips over the first few steps; b_n is its running
  /// maximum, an increasing sequence asymptotically equal to it.
  double b(long n) const;
  double c(long n) const;  // S4/R4 only
  /// a^{<-}(u) = min{n >= 1 : a_n >= u}.
  long a_inverse(double u) const;

 private:
  RegimeSpec() = default;
  double b_raw(long n) const;
  Regime tag_ = Regime::S1;
  double omega_ = 1.0;
  double beta_ = 2.0;
  std::optional<CoefficientFamily> family_;
  std::shared_ptr<const std::vector<double>> b_head_;  // R3/R4 running max
};

}  // namespace masim
