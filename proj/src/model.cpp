#include "masim/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace masim {

namespace {
constexpr long kPsiCache = 1L << 16;

double pow_int(double x, double e) { return std::pow(x, e); }
}  // namespace

// ---------------------------------------------------------------------------
// PowerPrefix

PowerPrefix::PowerPrefix(double exponent, double log_power, long cache_size)
    : exponent_(exponent), log_power_(log_power) {
  if (!(exponent > 0.0)) throw InvalidParameter("PowerPrefix exponent <= 0");
  cache_.resize(static_cast<size_t>(cache_size) + 1);
  cache_[0] = 0.0;
  double acc = 0.0;
  for (long k = 1; k <= cache_size; ++k) {
    double term = pow_int(static_cast<double>(k), -exponent_);
    if (log_power_ != 0.0)
      term *= pow_int(std::log(static_cast<double>(k) + std::numbers::e),
                      log_power_);
    acc += term;
    cache_[static_cast<size_t>(k)] = acc;
  }
  // Calibrate the Euler-Maclaurin constant against the exact head so the
  // continuation is seamless at the cache boundary.
  if (log_power_ == 0.0) {
    double n = static_cast<double>(cache_size);
    double em;
    if (exponent_ == 1.0) {
      em = std::log(n) + 0.5 / n - 1.0 / (12.0 * n * n);
    } else {
      em = pow_int(n, 1.0 - exponent_) / (1.0 - exponent_) +
           0.5 * pow_int(n, -exponent_) -
           exponent_ / 12.0 * pow_int(n, -exponent_ - 1.0);
    }
    zeta_ = cache_.back() - em;
  } else {
    zeta_ = 0.0;
  }
}

double PowerPrefix::psi(long k) const {
  if (k < 1) throw InvalidParameter("psi index < 1");
  double term = pow_int(static_cast<double>(k), -exponent_);
  if (log_power_ != 0.0)
    term *= pow_int(std::log(static_cast<double>(k) + std::numbers::e),
                    log_power_);
  return term;
}

double PowerPrefix::prefix(long n) const {
  if (n <= 0) return 0.0;
  if (n < static_cast<long>(cache_.size()))
    return cache_[static_cast<size_t>(n)];
  if (log_power_ != 0.0)
    throw InvalidParameter(
        "psi prefix beyond cache is unavailable for log-powered envelopes");
  double x = static_cast<double>(n);
  if (exponent_ == 1.0)
    return zeta_ + std::log(x) + 0.5 / x - 1.0 / (12.0 * x * x);
  return zeta_ + pow_int(x, 1.0 - exponent_) / (1.0 - exponent_) +
         0.5 * pow_int(x, -exponent_) -
         exponent_ / 12.0 * pow_int(x, -exponent_ - 1.0);
}

// ---------------------------------------------------------------------------
// CoefficientFamily

CoefficientFamily CoefficientFamily::finite_lag(
    std::vector<std::pair<long, double>> taps, bool normalized) {
  if (taps.empty()) throw InvalidParameter("finite_lag: no taps");
  std::sort(taps.begin(), taps.end());
  for (size_t k = 1; k < taps.size(); ++k)
    if (taps[k].first == taps[k - 1].first)
      throw InvalidParameter("finite_lag: duplicate tap index");
  if (normalized) {
    double s = 0.0;
    for (auto& [i, v] : taps) s += v;
    if (std::abs(s) < 1e-300)
      throw NotNormalizable("finite_lag taps sum to zero");
    for (auto& [i, v] : taps) v /= s;
  }
  CoefficientFamily f;
  f.kind_ = FamilyKind::FiniteLag;
  f.normalized_ = normalized;
  f.taps_ = std::move(taps);
  f.min_support_ = f.taps_.front().first;
  f.max_support_ = f.taps_.back().first;
  return f;
}

CoefficientFamily CoefficientFamily::geometric(double ratio, double scale,
                                               bool normalized) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw InvalidParameter("geometric: ratio must be in (0,1)");
  if (!(scale > 0.0)) throw InvalidParameter("geometric: scale must be > 0");
  CoefficientFamily f;
  f.kind_ = FamilyKind::Geometric;
  f.ratio_ = ratio;
  f.scale_ = normalized ? (1.0 - ratio) : scale;
  f.normalized_ = normalized;
  f.min_support_ = 0;
  f.max_support_ = std::numeric_limits<long>::max() / 4;
  return f;
}

CoefficientFamily CoefficientFamily::power_summable(double exponent,
                                                    double scale,
                                                    bool normalized) {
  if (!(exponent > 1.0))
    throw InvalidParameter("power_summable: exponent must be > 1");
  if (!(scale > 0.0))
    throw InvalidParameter("power_summable: scale must be > 0");
  CoefficientFamily f;
  f.kind_ = FamilyKind::PowerSummable;
  f.exponent_ = exponent;
  f.prefix_ = std::make_shared<PowerPrefix>(exponent, 0.0, 1L << 14);
  double zeta = std::riemann_zeta(exponent);
  f.scale_ = normalized ? 1.0 / zeta : scale;
  f.normalized_ = normalized;
  f.min_support_ = 0;
  f.max_support_ = std::numeric_limits<long>::max() / 4;
  return f;
}

CoefficientFamily CoefficientFamily::balanced_power(double alpha, double p,
                                                    double scale,
                                                    double log_power) {
  if (!(alpha > 0.5 && alpha <= 1.0))
    throw InvalidParameter("balanced_power: alpha must be in (1/2, 1]");
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidParameter("balanced_power: p must be in [0,1]");
  if (!(scale > 0.0))
    throw InvalidParameter("balanced_power: scale must be > 0");
  CoefficientFamily f;
  f.kind_ = FamilyKind::BalancedPower;
  f.alpha_ = alpha;
  f.p_ = p;
  f.scale_ = scale;
  f.log_power_ = log_power;
  f.prefix_ = std::make_shared<PowerPrefix>(alpha, log_power, kPsiCache);
  f.min_support_ = std::numeric_limits<long>::min() / 4;
  f.max_support_ = std::numeric_limits<long>::max() / 4;
  return f;
}

double CoefficientFamily::phi(long i) const {
  switch (kind_) {
    case FamilyKind::FiniteLag: {
      for (const auto& [k, v] : taps_)
        if (k == i) return v;
      return 0.0;
    }
    case FamilyKind::Geometric:
      return i >= 0 ? scale_ * std::pow(ratio_, static_cast<double>(i)) : 0.0;
    case FamilyKind::PowerSummable:
      return i >= 0 ? scale_ * prefix_->psi(i + 1) : 0.0;
    case FamilyKind::BalancedPower:
      if (i >= 1) return p_ * psi(i);
      if (i <= -1) return (1.0 - p_) * psi(-i);
      return 0.0;
  }
  return 0.0;
}

double CoefficientFamily::psi(long n) const {
  if (kind_ != FamilyKind::BalancedPower)
    throw UnsupportedFamily("psi is defined for balanced-power families");
  return scale_ * prefix_->psi(n);
}

double CoefficientFamily::psi_prefix(long n) const {
  if (kind_ != FamilyKind::BalancedPower)
    throw UnsupportedFamily("Psi is defined for balanced-power families");
  return scale_ * prefix_->prefix(n);
}

double CoefficientFamily::partial_sum(long i, long n) const {
  if (n < 1) throw InvalidParameter("partial_sum: n must be >= 1");
  switch (kind_) {
    case FamilyKind::FiniteLag: {
      double s = 0.0;
      for (const auto& [k, v] : taps_)
        if (k > i && k <= i + n) s += v;
      return s;
    }
    case FamilyKind::Geometric: {
      long hi = i + n;
      if (hi < 0) return 0.0;
      long k0 = std::max(i + 1, 0L);
      // scale * sum_{k=k0}^{hi} r^k
      return scale_ *
             (std::pow(ratio_, static_cast<double>(k0)) -
              std::pow(ratio_, static_cast<double>(hi + 1))) /
             (1.0 - ratio_);
    }
    case FamilyKind::PowerSummable: {
      long hi = i + n;
      if (hi < 0) return 0.0;
      long k0 = std::max(i + 1, 0L);
      return scale_ * (prefix_->prefix(hi + 1) - prefix_->prefix(k0));
    }
    case FamilyKind::BalancedPower: {
      double s = 0.0;
      long hi = i + n;
      if (hi >= 1)
        s += p_ * scale_ *
             (prefix_->prefix(hi) - prefix_->prefix(std::max(i, 0L)));
      long j_hi = -i - 1;
      if (j_hi >= 1) {
        long j_lo = std::max(-hi, 1L);
        if (j_hi >= j_lo)
          s += (1.0 - p_) * scale_ *
               (prefix_->prefix(j_hi) - prefix_->prefix(j_lo - 1));
      }
      return s;
    }
  }
  return 0.0;
}

double CoefficientFamily::sum() const {
  switch (kind_) {
    case FamilyKind::FiniteLag: {
      double s = 0.0;
      for (const auto& [i, v] : taps_) s += v;
      return s;
    }
    case FamilyKind::Geometric:
      return scale_ / (1.0 - ratio_);
    case FamilyKind::PowerSummable:
      return scale_ * std::riemann_zeta(exponent_);
    case FamilyKind::BalancedPower:
      throw UnsupportedFamily("sum diverges for balanced-power families");
  }
  return 0.0;
}

double CoefficientFamily::abs_sum() const {
  switch (kind_) {
    case FamilyKind::FiniteLag: {
      double s = 0.0;
      for (const auto& [i, v] : taps_) s += std::abs(v);
      return s;
    }
    case FamilyKind::Geometric:
    case FamilyKind::PowerSummable:
      return sum();
    case FamilyKind::BalancedPower:
      return kInf;
  }
  return 0.0;
}

double CoefficientFamily::positive_sum() const {
  if (kind_ == FamilyKind::FiniteLag) {
    double s = 0.0;
    for (const auto& [i, v] : taps_) s += std::max(v, 0.0);
    return s;
  }
  if (kind_ == FamilyKind::BalancedPower)
    throw UnsupportedFamily("positive_sum diverges for balanced-power");
  return sum();
}

double CoefficientFamily::sum_sq() const {
  switch (kind_) {
    case FamilyKind::FiniteLag: {
      double s = 0.0;
      for (const auto& [i, v] : taps_) s += v * v;
      return s;
    }
    case FamilyKind::Geometric:
      return scale_ * scale_ / (1.0 - ratio_ * ratio_);
    case FamilyKind::PowerSummable:
      return scale_ * scale_ * std::riemann_zeta(2.0 * exponent_);
    case FamilyKind::BalancedPower: {
      double pq = p_ * p_ + (1.0 - p_) * (1.0 - p_);
      if (log_power_ == 0.0)
        return pq * scale_ * scale_ * std::riemann_zeta(2.0 * alpha_);
      // Log-powered envelope: exact head plus an integral bound on the tail.
      double head = 0.0;
      long n = prefix_->cache_size();
      for (long k = 1; k <= n; ++k) {
        double v = psi(k);
        head += v * v;
      }
      double x = static_cast<double>(n);
      double logf = std::pow(std::log(x + std::numbers::e), 2 * log_power_);
      double tail = scale_ * scale_ * logf * std::pow(x, 1.0 - 2.0 * alpha_) /
                    (2.0 * alpha_ - 1.0);
      return pq * (head + tail);
    }
  }
  return 0.0;
}

double CoefficientFamily::abs_tail(long K) const {
  switch (kind_) {
    case FamilyKind::FiniteLag: {
      double s = 0.0;
      for (const auto& [i, v] : taps_)
        if (std::labs(i) > K) s += std::abs(v);
      return s;
    }
    case FamilyKind::Geometric:
      if (K < 0) return abs_sum();
      return scale_ * std::pow(ratio_, static_cast<double>(K + 1)) /
             (1.0 - ratio_);
    case FamilyKind::PowerSummable:
      if (K < 0) return abs_sum();
      return scale_ *
             (std::riemann_zeta(exponent_) - prefix_->prefix(K + 1));
    case FamilyKind::BalancedPower:
      return kInf;
  }
  return 0.0;
}

CoefficientFamily::WindowRange CoefficientFamily::window_range(
    long n_max) const {
  WindowRange r;
  switch (kind_) {
    case FamilyKind::FiniteLag: {
      long span = max_support_ - min_support_;
      if (span > 4096)
        throw InvalidParameter("finite_lag window enumeration: span too wide");
      long n_top = std::min(n_max, span + 1);
      r.lo = 0.0;  // far windows are empty
      r.hi = 0.0;
      for (long n = 1; n <= n_top; ++n) {
        for (long i = min_support_ - n; i <= max_support_; ++i) {
          double v = partial_sum(i, n);
          r.lo = std::min(r.lo, v);
          r.hi = std::max(r.hi, v);
        }
      }
      if (n_max >= span + 1) {
        // Every achievable window value already occurs for n <= span+1.
        r.hi_certified = r.hi;
        r.lo_certified = r.lo;
      } else {
        double pos = 0.0, neg = 0.0;
        for (const auto& [i, v] : taps_)
          (v >= 0.0 ? pos : neg) += v;
        r.hi_certified = pos;
        r.lo_certified = neg;
      }
      return r;
    }
    case FamilyKind::Geometric:
    case FamilyKind::PowerSummable: {
      // Positive decreasing one-sided coefficients: extremes are the full
      // prefix window and the empty window.
      r.lo = 0.0;
      r.lo_certified = 0.0;
      r.hi = partial_sum(-1, n_max);
      r.hi_certified = sum();
      return r;
    }
    case FamilyKind::BalancedPower:
      throw UnsupportedFamily(
          "window_range applies to absolutely summable families");
  }
  return r;
}

long CoefficientFamily::default_truncation(double tol) const {
  switch (kind_) {
    case FamilyKind::FiniteLag:
      return std::max(std::labs(min_support_), std::labs(max_support_));
    case FamilyKind::Geometric: {
      long L = 1;
      while (abs_tail(L) >= tol && L < (1L << 40)) L *= 2;
      long lo = L / 2, hi = L;
      while (lo + 1 < hi) {
        long mid = (lo + hi) / 2;
        (abs_tail(mid) < tol ? hi : lo) = mid;
      }
      return hi;
    }
    case FamilyKind::PowerSummable: {
      long L = 1;
      while (abs_tail(L) >= tol && L < (1L << 40)) L *= 2;
      long lo = L / 2, hi = L;
      while (lo + 1 < hi) {
        long mid = (lo + hi) / 2;
        (abs_tail(mid) < tol ? hi : lo) = mid;
      }
      return hi;
    }
    case FamilyKind::BalancedPower:
      return 10000;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// HeavyProfile

HeavyProfile HeavyProfile::isotropic(double beta, double a) {
  if (!(beta > 1.0)) throw InvalidParameter("heavy profile: beta must be > 1");
  if (!(a > 0.0)) throw InvalidParameter("heavy profile: a must be > 0");
  HeavyProfile hp;
  hp.beta = beta;
  hp.zeta = [a](const Eigen::VectorXd&) { return a; };
  return hp;
}

HeavyProfile HeavyProfile::one_dim(double beta, double xi_plus,
                                   double xi_minus) {
  if (!(beta > 1.0)) throw InvalidParameter("heavy profile: beta must be > 1");
  HeavyProfile hp;
  hp.beta = beta;
  hp.zeta = [xi_plus, xi_minus](const Eigen::VectorXd& u) {
    return u(0) >= 0.0 ? xi_plus : xi_minus;
  };
  return hp;
}

// ---------------------------------------------------------------------------
// InnovationModel

InnovationModel InnovationModel::gaussian(Eigen::MatrixXd sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw InvalidParameter("gaussian: covariance must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw InvalidParameter("gaussian: covariance not positive definite");
  InnovationModel m;
  m.law_ = Law::Gaussian;
  m.dim_ = static_cast<int>(sigma.rows());
  m.sigma_ = std::move(sigma);
  m.variance_ = m.sigma_(0, 0);
  return m;
}

InnovationModel InnovationModel::gaussian1(double variance) {
  if (!(variance > 0.0)) throw InvalidParameter("gaussian1: variance <= 0");
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = variance;
  return gaussian(std::move(s));
}

InnovationModel InnovationModel::centered_exponential(double rate) {
  if (!(rate > 0.0)) throw InvalidParameter("centered_exponential: rate <= 0");
  InnovationModel m;
  m.law_ = Law::CenteredExponential;
  m.rate_ = rate;
  return m;
}

InnovationModel InnovationModel::centered_gamma(double shape, double rate) {
  if (!(shape > 0.0 && rate > 0.0))
    throw InvalidParameter("centered_gamma: shape and rate must be > 0");
  InnovationModel m;
  m.law_ = Law::CenteredGamma;
  m.shape_ = shape;
  m.rate_ = rate;
  return m;
}

InnovationModel InnovationModel::bounded_uniform(double half_width) {
  if (!(half_width > 0.0))
    throw InvalidParameter("bounded_uniform: half width <= 0");
  InnovationModel m;
  m.law_ = Law::BoundedUniform;
  m.half_width_ = half_width;
  return m;
}

InnovationModel InnovationModel::two_sided_discrete(
    std::vector<std::pair<double, double>> atoms_weights) {
  if (atoms_weights.empty())
    throw InvalidParameter("two_sided_discrete: no atoms");
  double wsum = 0.0, mean = 0.0;
  for (const auto& [a, w] : atoms_weights) {
    if (!(w >= 0.0)) throw InvalidParameter("two_sided_discrete: weight < 0");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw InvalidParameter("two_sided_discrete: zero mass");
  for (auto& [a, w] : atoms_weights) w /= wsum;
  for (const auto& [a, w] : atoms_weights) mean += a * w;
  if (std::abs(mean) > 1e-9)
    throw InvalidParameter("two_sided_discrete: atoms are not centered");
  InnovationModel m;
  m.law_ = Law::TwoSidedDiscrete;
  m.atoms_ = std::move(atoms_weights);
  return m;
}

double InnovationModel::log_mgf(double t) const {
  switch (law_) {
    case Law::Gaussian:
      return 0.5 * variance_ * t * t;
    case Law::CenteredExponential:
      if (t >= rate_) return kInf;
      return -std::log1p(-t / rate_) - t / rate_;
    case Law::CenteredGamma:
      if (t >= rate_) return kInf;
      return shape_ * (-std::log1p(-t / rate_) - t / rate_);
    case Law::BoundedUniform: {
      double x = std::abs(t) * half_width_;
      if (x < 1e-4) {
        double x2 = x * x;
        return x2 / 6.0 - x2 * x2 / 180.0;
      }
      return x - std::log(2.0 * x) + std::log1p(-std::exp(-2.0 * x));
    }
    case Law::TwoSidedDiscrete: {
      double mx = -kInf;
      for (const auto& [a, w] : atoms_) mx = std::max(mx, t * a);
      double s = 0.0;
      for (const auto& [a, w] : atoms_) s += w * std::exp(t * a - mx);
      return mx + std::log(s);
    }
  }
  return 0.0;
}

double InnovationModel::dlog_mgf(double t) const {
  switch (law_) {
    case Law::Gaussian:
      return variance_ * t;
    case Law::CenteredExponential:
      if (t >= rate_) return kInf;
      return t / (rate_ * (rate_ - t));
    case Law::CenteredGamma:
      if (t >= rate_) return kInf;
      return shape_ * t / (rate_ * (rate_ - t));
    case Law::BoundedUniform: {
      double x = t * half_width_;
      if (std::abs(x) < 1e-4)
        return half_width_ * (x / 3.0 - x * x * x / 45.0);
      return half_width_ * (1.0 / std::tanh(x) - 1.0 / x);
    }
    case Law::TwoSidedDiscrete: {
      double mx = -kInf;
      for (const auto& [a, w] : atoms_) mx = std::max(mx, t * a);
      double s = 0.0, sa = 0.0;
      for (const auto& [a, w] : atoms_) {
        double e = w * std::exp(t * a - mx);
        s += e;
        sa += a * e;
      }
      return sa / s;
    }
  }
  return 0.0;
}

double InnovationModel::log_mgf(const Eigen::VectorXd& t) const {
  if (t.size() == 1) return log_mgf(t(0));
  if (law_ != Law::Gaussian)
    throw UnsupportedDimension("multivariate log-MGF is Gaussian-only");
  return 0.5 * t.dot(sigma_ * t);
}

Eigen::VectorXd InnovationModel::grad_log_mgf(const Eigen::VectorXd& t) const {
  if (t.size() == 1) {
    Eigen::VectorXd g(1);
    g(0) = dlog_mgf(t(0));
    return g;
  }
  if (law_ != Law::Gaussian)
    throw UnsupportedDimension("multivariate gradient is Gaussian-only");
  return sigma_ * t;
}

Interval InnovationModel::mgf_domain() const {
  switch (law_) {
    case Law::CenteredExponential:
    case Law::CenteredGamma:
      return {-kInf, rate_};
    default:
      return {};
  }
}

bool InnovationModel::mgf_everywhere_finite() const {
  return mgf_domain().whole_line();
}

double InnovationModel::variance() const {
  switch (law_) {
    case Law::Gaussian:
      return variance_;
    case Law::CenteredExponential:
      return 1.0 / (rate_ * rate_);
    case Law::CenteredGamma:
      return shape_ / (rate_ * rate_);
    case Law::BoundedUniform:
      return half_width_ * half_width_ / 3.0;
    case Law::TwoSidedDiscrete: {
      double s = 0.0;
      for (const auto& [a, w] : atoms_) s += w * a * a;
      return s;
    }
  }
  return 0.0;
}

Eigen::MatrixXd InnovationModel::covariance() const {
  if (law_ == Law::Gaussian) return sigma_;
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = variance();
  return s;
}

bool InnovationModel::unbounded_above() const {
  switch (law_) {
    case Law::Gaussian:
    case Law::CenteredExponential:
    case Law::CenteredGamma:
      return true;
    default:
      return false;
  }
}

std::optional<HeavyProfile> InnovationModel::heavy_profile() const {
  if (heavy_) return heavy_;
  if (law_ == Law::Gaussian) {
    Eigen::MatrixXd sigma = sigma_;
    HeavyProfile hp;
    hp.beta = 2.0;
    hp.zeta = [sigma](const Eigen::VectorXd& u) {
      return 0.5 * u.dot(sigma * u);
    };
    return hp;
  }
  return std::nullopt;
}

InnovationModel InnovationModel::with_heavy_profile(HeavyProfile hp) const {
  InnovationModel m = *this;
  m.heavy_ = std::move(hp);
  return m;
}

namespace {

// Marsaglia-Tsang with addressed lanes; `lane0` reserves the first lane pair.
double gamma_std(const CounterRng& rng, int64_t idx, double shape,
                 uint32_t lane0) {
  double boost = 1.0;
  if (shape < 1.0) {
    double u = rng.uniform(idx, lane0);
    boost = std::pow(u, 1.0 / shape);
    shape += 1.0;
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (uint32_t trial = 0;; ++trial) {
    double x = rng.normal(idx, lane0 + 2 + 2 * trial);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng.uniform(idx, lane0 + 3 + 2 * trial);
    if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return boost * d * v;
  }
}

}  // namespace

double InnovationModel::sample(const CounterRng& rng, int64_t idx) const {
  switch (law_) {
    case Law::Gaussian:
      if (dim_ != 1) throw UnsupportedDimension("sampling is univariate");
      return std::sqrt(variance_) * rng.normal(idx);
    case Law::CenteredExponential:
      return -std::log(rng.uniform(idx)) / rate_ - 1.0 / rate_;
    case Law::CenteredGamma:
      return gamma_std(rng, idx, shape_, 0) / rate_ - shape_ / rate_;
    case Law::BoundedUniform:
      return half_width_ * (2.0 * rng.uniform(idx) - 1.0);
    case Law::TwoSidedDiscrete: {
      double u = rng.uniform(idx);
      double acc = 0.0;
      for (const auto& [a, w] : atoms_) {
        acc += w;
        if (u <= acc) return a;
      }
      return atoms_.back().first;
    }
  }
  return 0.0;
}

double InnovationModel::sample_tilted(const CounterRng& rng, int64_t idx,
                                      double theta) const {
  if (!mgf_domain().contains(theta))
    throw InvalidParameter("tilt outside the log-MGF domain");
  switch (law_) {
    case Law::Gaussian:
      if (dim_ != 1) throw UnsupportedDimension("sampling is univariate");
      return variance_ * theta + std::sqrt(variance_) * rng.normal(idx);
    case Law::CenteredExponential:
      return -std::log(rng.uniform(idx)) / (rate_ - theta) - 1.0 / rate_;
    case Law::CenteredGamma:
      return gamma_std(rng, idx, shape_, 0) / (rate_ - theta) -
             shape_ / rate_;
    case Law::BoundedUniform: {
      if (std::abs(theta) * half_width_ < 1e-12) return sample(rng, idx);
      double u = rng.uniform(idx);
      double a = std::exp(-theta * half_width_);
      double b = std::exp(theta * half_width_);
      return std::log(a + u * (b - a)) / theta;
    }
    case Law::TwoSidedDiscrete: {
      double z = 0.0;
      for (const auto& [a, w] : atoms_) z += w * std::exp(theta * a);
      double u = rng.uniform(idx);
      double acc = 0.0;
      for (const auto& [a, w] : atoms_) {
        acc += w * std::exp(theta * a) / z;
        if (u <= acc) return a;
      }
      return atoms_.back().first;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// TargetSet

TargetSet TargetSet::half_line(double y) {
  TargetSet s;
  s.v_ = Eigen::VectorXd::Ones(1);
  s.level_ = y;
  return s;
}

TargetSet TargetSet::half_space(Eigen::VectorXd v, double level) {
  if (v.size() < 1 || v.norm() == 0.0)
    throw InvalidParameter("half_space: direction must be nonzero");
  TargetSet s;
  s.v_ = std::move(v);
  s.level_ = level;
  return s;
}

TargetSet TargetSet::closed_variant() const {
  TargetSet s = *this;
  s.closed_ = true;
  return s;
}

bool TargetSet::contains(double x) const {
  if (dim() != 1) throw UnsupportedDimension("scalar membership on d>1 set");
  double s = v_(0) * x;
  return closed_ ? s >= level_ : s > level_;
}

bool TargetSet::contains(const Eigen::VectorXd& x) const {
  double s = v_.dot(x);
  return closed_ ? s >= level_ : s > level_;
}

double TargetSet::support_inf(const Eigen::VectorXd& t) const {
  double tn = t.norm();
  if (tn == 0.0) return 0.0;
  double kappa = t.dot(v_) / v_.squaredNorm();
  Eigen::VectorXd resid = t - kappa * v_;
  if (resid.norm() > 1e-12 * tn) return -kInf;
  if (kappa < 0.0) return -kInf;
  return kappa * level_;
}

double TargetSet::support_inf(double t) const {
  Eigen::VectorXd v(1);
  v(0) = t;
  return support_inf(v);
}

TargetSet TargetSet::shrink(double eta) const {
  if (!(eta >= 0.0)) throw InvalidParameter("shrink: eta must be >= 0");
  TargetSet s = *this;
  s.level_ = level_ + eta * v_.norm();
  return s;
}

TargetSet::ConditionA TargetSet::condition_a(const Eigen::VectorXd& mu) const {
  ConditionA c;
  c.witness = v_;
  c.holds = v_.dot(mu) > 0.0 && level_ > 0.0;
  return c;
}

TargetSet::ConditionA TargetSet::condition_a(double mu) const {
  Eigen::VectorXd m(1);
  m(0) = mu;
  return condition_a(m);
}

// ---------------------------------------------------------------------------
// RegimeSpec

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::S1: return "S1";
    case Regime::S2: return "S2";
    case Regime::S3: return "S3";
    case Regime::S4: return "S4";
    case Regime::R1: return "R1";
    case Regime::R2: return "R2";
    case Regime::R3: return "R3";
    case Regime::R4: return "R4";
  }
  return "?";
}

Regime regime_from_name(const std::string& name) {
  static const std::map<std::string, Regime> m = {
      {"S1", Regime::S1}, {"S2", Regime::S2}, {"S3", Regime::S3},
      {"S4", Regime::S4}, {"R1", Regime::R1}, {"R2", Regime::R2},
      {"R3", Regime::R3}, {"R4", Regime::R4}};
  auto it = m.find(name);
  if (it == m.end()) throw ConfigError("unknown regime tag '" + name + "'");
  return it->second;
}

RegimeSpec RegimeSpec::s1() {
  RegimeSpec r;
  r.tag_ = Regime::S1;
  r.omega_ = 1.0;
  return r;
}

RegimeSpec RegimeSpec::s2() {
  RegimeSpec r;
  r.tag_ = Regime::S2;
  r.omega_ = 1.0;
  return r;
}

RegimeSpec RegimeSpec::s3(double omega) {
  if (!(omega > 0.5 && omega < 1.0))
    throw RegimeMismatch("S3 requires omega in (1/2, 1)");
  RegimeSpec r;
  r.tag_ = Regime::S3;
  r.omega_ = omega;
  return r;
}

RegimeSpec RegimeSpec::s4(double omega, double beta) {
  if (!(omega > 1.0)) throw RegimeMismatch("S4 requires omega > 1");
  if (!(beta > 1.0)) throw RegimeMismatch("S4 requires beta > 1");
  RegimeSpec r;
  r.tag_ = Regime::S4;
  r.omega_ = omega;
  r.beta_ = beta;
  return r;
}

RegimeSpec RegimeSpec::r1(CoefficientFamily fam) {
  if (fam.memory() != Memory::Long)
    throw RegimeMismatch("R1 requires a balanced-power family");
  RegimeSpec r;
  r.tag_ = Regime::R1;
  r.omega_ = 2.0 - fam.alpha();
  r.family_ = std::move(fam);
  return r;
}

RegimeSpec RegimeSpec::r2(CoefficientFamily fam) {
  if (fam.memory() != Memory::Long)
    throw RegimeMismatch("R2 requires a balanced-power family");
  RegimeSpec r;
  r.tag_ = Regime::R2;
  r.omega_ = 2.0 - fam.alpha();
  r.family_ = std::move(fam);
  return r;
}

namespace {
std::shared_ptr<const std::vector<double>> running_max_head(
    const RegimeSpec& r, long upto) {
  auto head = std::make_shared<std::vector<double>>(
      static_cast<size_t>(upto) + 1, 0.0);
  double mx = 0.0;
  for (long n = 1; n <= upto; ++n) {
    mx = std::max(mx, r.b(n));
    (*head)[static_cast<size_t>(n)] = mx;
  }
  return head;
}
}  // namespace

RegimeSpec RegimeSpec::r3(double omega, CoefficientFamily fam) {
  if (fam.memory() != Memory::Long)
    throw RegimeMismatch("R3 requires a balanced-power family");
  double alpha = fam.alpha();
  if (!(omega > 1.5 - alpha && omega <= 2.0 - alpha))
    throw RegimeMismatch("R3 requires omega in (3/2 - alpha, 2 - alpha]");
  RegimeSpec r;
  r.tag_ = Regime::R3;
  r.omega_ = omega;
  r.family_ = std::move(fam);
  r.b_head_ = running_max_head(r, 4096);
  return r;
}

RegimeSpec RegimeSpec::r4(double omega, double beta, CoefficientFamily fam) {
  if (fam.memory() != Memory::Long)
    throw RegimeMismatch("R4 requires a balanced-power family");
  if (!(omega >= 2.0 - fam.alpha()))
    throw RegimeMismatch("R4 requires omega >= 2 - alpha");
  if (!(beta > 1.0)) throw RegimeMismatch("R4 requires beta > 1");
  RegimeSpec r;
  r.tag_ = Regime::R4;
  r.omega_ = omega;
  r.beta_ = beta;
  r.family_ = std::move(fam);
  r.b_head_ = running_max_head(r, 4096);
  return r;
}

const CoefficientFamily& RegimeSpec::family() const {
  if (!family_) throw RegimeMismatch("regime carries no coefficient family");
  return *family_;
}

double RegimeSpec::a(long n) const {
  if (n < 1) throw InvalidParameter("a_n: n must be >= 1");
  double x = static_cast<double>(n);
  switch (tag_) {
    case Regime::S1:
    case Regime::S2:
      return x;
    case Regime::S3:
    case Regime::S4:
    case Regime::R3:
    case Regime::R4:
      return std::pow(x, omega_);
    case Regime::R1:
    case Regime::R2:
      return x * family_->psi_prefix(n);
  }
  return x;
}

double RegimeSpec::c(long n) const {
  double x = static_cast<double>(n);
  switch (tag_) {
    case Regime::S4:
      return std::pow(a(n) / x, 1.0 / (beta_ - 1.0));
    case Regime::R4: {
      // sup{ c : tau(Psi_n c)/c <= a_n/n } for tau(t) = t^beta; the ratio is
      // increasing in c, solved by monotone bisection.
      double psi_n = family_->psi_prefix(n);
      double target = a(n) / x;
      auto h = [&](double cc) {
        return std::pow(psi_n * cc, beta_) / cc - target;
      };
      double hi = 1.0;
      while (h(hi) < 0.0) hi *= 2.0;
      double lo = hi / 2.0;
      while (h(lo) > 0.0) lo /= 2.0;
      double tol = 1e-13;
      for (int i = 0; i < 200 && (hi - lo) > tol * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (h(mid) <= 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    default:
      throw RegimeMismatch("c_n is defined for S4/R4 only");
  }
}

double RegimeSpec::b(long n) const {
  if (n < 1) throw InvalidParameter("b_n: n must be >= 1");
  if (!b_head_) return b_raw(n);
  const std::vector<double>& head = *b_head_;
  if (n < static_cast<long>(head.size())) return head[static_cast<size_t>(n)];
  return std::max(b_raw(n), head.back());
}

double RegimeSpec::b_raw(long n) const {
  double x = static_cast<double>(n);
  switch (tag_) {
    case Regime::S1:
    case Regime::S2:
    case Regime::R1:
    case Regime::R2:
      return x;
    case Regime::S3: {
      double an = a(n);
      return an * an / x;
    }
    case Regime::S4:
      return x * std::pow(c(n), beta_);
    case Regime::R3: {
      double an = a(n);
      double psi_n = family_->psi_prefix(n);
      return an * an / (x * psi_n * psi_n);
    }
    case Regime::R4: {
      double psi_n = family_->psi_prefix(n);
      return x * std::pow(psi_n * c(n), beta_);
    }
  }
  return x;
}

long RegimeSpec::a_inverse(double u) const {
  if (a(1) >= u) return 1;
  long hi = 2;
  while (a(hi) < u) {
    if (hi > (1L << 40)) throw InvalidParameter("a_inverse: u too large");
    hi *= 2;
  }
  long lo = hi / 2;
  while (lo + 1 < hi) {
    long mid = lo + (hi - lo) / 2;
    (a(mid) >= u ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace masim
