#include "masim/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace masim {

namespace {

long resolve_truncation(const PathConfig& cfg) {
  return cfg.truncation > 0 ? cfg.truncation : cfg.fam.default_truncation();
}

double truncation_error(const CoefficientFamily& fam, long L, long m) {
  if (fam.memory() == Memory::Short) return fam.abs_tail(L);
  return (fam.psi_prefix(L + m) - fam.psi_prefix(L)) / fam.psi_prefix(m);
}

// ---------------------------------------------------------------------------
// FFT machinery: plans are cached per size and executed on caller-owned
// fftw_malloc'd buffers, so concurrent paths never share scratch memory and
// the transform algorithm (hence the bits) is fixed per size.

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

struct PlanCache {
  std::mutex mu;
  std::map<long, PlanPair> plans;
  ~PlanCache() {
    for (auto& [n, p] : plans) {
      fftw_destroy_plan(p.fwd);
      fftw_destroy_plan(p.inv);
    }
    fftw_cleanup();
  }
};

PlanPair plans_for(long n) {
  static PlanCache cache;
  std::lock_guard<std::mutex> lock(cache.mu);
  auto it = cache.plans.find(n);
  if (it != cache.plans.end()) return it->second;
  double* re = fftw_alloc_real(static_cast<size_t>(n));
  fftw_complex* im = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
  PlanPair p;
  p.fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), re, im, FFTW_ESTIMATE);
  p.inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), im, re, FFTW_ESTIMATE);
  fftw_free(re);
  fftw_free(im);
  cache.plans[n] = p;
  return p;
}

struct FftwRealBuf {
  explicit FftwRealBuf(long n)
      : data(fftw_alloc_real(static_cast<size_t>(n))) {}
  ~FftwRealBuf() { fftw_free(data); }
  double* data;
};

struct FftwCplxBuf {
  explicit FftwCplxBuf(long n)
      : data(fftw_alloc_complex(static_cast<size_t>(n))) {}
  ~FftwCplxBuf() { fftw_free(data); }
  fftw_complex* data;
};

// Linear convolution by zero-padded real FFTs; out has length na + nb - 1.
std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  long need = static_cast<long>(a.size() + b.size()) - 1;
  long n = 1;
  while (n < need) n <<= 1;
  PlanPair plans = plans_for(n);
  FftwRealBuf ra(n), rb(n);
  FftwCplxBuf ca(n / 2 + 1), cb(n / 2 + 1);
  std::fill(ra.data, ra.data + n, 0.0);
  std::fill(rb.data, rb.data + n, 0.0);
  std::copy(a.begin(), a.end(), ra.data);
  std::copy(b.begin(), b.end(), rb.data);
  fftw_execute_dft_r2c(plans.fwd, ra.data, ca.data);
  fftw_execute_dft_r2c(plans.fwd, rb.data, cb.data);
  for (long k = 0; k <= n / 2; ++k) {
    double re = ca.data[k][0] * cb.data[k][0] - ca.data[k][1] * cb.data[k][1];
    double im = ca.data[k][0] * cb.data[k][1] + ca.data[k][1] * cb.data[k][0];
    ca.data[k][0] = re / static_cast<double>(n);
    ca.data[k][1] = im / static_cast<double>(n);
  }
  fftw_execute_dft_c2r(plans.inv, ca.data, ra.data);
  return std::vector<double>(ra.data, ra.data + need);
}

std::vector<double> draw_innovations(const PathConfig& cfg, long j_lo,
                                     long j_hi) {
  CounterRng rng(cfg.seed, cfg.path_index);
  std::vector<double> z(static_cast<size_t>(j_hi - j_lo + 1));
  for (long j = j_lo; j <= j_hi; ++j)
    z[static_cast<size_t>(j - j_lo)] = cfg.model.sample(rng, j);
  return z;
}

Path assemble(const PathConfig& cfg, long L, std::vector<double> x) {
  Path p;
  p.x = std::move(x);
  p.s.resize(p.x.size() + 1);
  p.s[0] = 0.0;
  for (size_t n = 0; n < p.x.size(); ++n) p.s[n + 1] = p.s[n] + p.x[n];
  p.tau_err = truncation_error(cfg.fam, L, cfg.m);
  p.truncation = L;
  p.seed = cfg.seed;
  p.path_index = cfg.path_index;
  return p;
}

}  // namespace

std::vector<double> convolve_reference(const CoefficientFamily& fam, long L,
                                       const std::vector<double>& z, long m) {
  if (static_cast<long>(z.size()) != m + 2 * L)
    throw InvalidParameter("convolve_reference: need m + 2L innovations");
  std::vector<double> x(static_cast<size_t>(m), 0.0);
  if (fam.kind() == FamilyKind::FiniteLag) {
    for (const auto& [i, v] : fam.taps()) {
      if (std::labs(i) > L) continue;
      for (long n = 1; n <= m; ++n)
        x[static_cast<size_t>(n - 1)] +=
            v * z[static_cast<size_t>(n - i - (1 - L))];
    }
    return x;
  }
  std::vector<double> kern(static_cast<size_t>(2 * L + 1));
  for (long i = -L; i <= L; ++i)
    kern[static_cast<size_t>(i + L)] = fam.phi(i);
  for (long n = 1; n <= m; ++n) {
    double acc = 0.0;
    for (long i = -L; i <= L; ++i)
      acc += kern[static_cast<size_t>(i + L)] *
             z[static_cast<size_t>(n - i - (1 - L))];
    x[static_cast<size_t>(n - 1)] = acc;
  }
  return x;
}

Path sample_path(const PathConfig& cfg) {
  if (cfg.m < 1) throw InvalidParameter("sample_path: m must be >= 1");
  const long L = resolve_truncation(cfg);

  if (cfg.fam.kind() == FamilyKind::FiniteLag) {
    // Sparse taps: draw only the innovations any used tap touches.
    std::vector<std::pair<long, double>> taps;
    for (const auto& t : cfg.fam.taps())
      if (std::labs(t.first) <= L) taps.push_back(t);
    if (taps.empty()) return assemble(cfg, L, std::vector<double>(cfg.m, 0.0));
    long i_min = taps.front().first, i_max = taps.front().first;
    for (const auto& [i, v] : taps) {
      i_min = std::min(i_min, i);
      i_max = std::max(i_max, i);
    }
    long j_lo = 1 - i_max, j_hi = cfg.m - i_min;
    std::vector<double> z = draw_innovations(cfg, j_lo, j_hi);
    std::vector<double> x(static_cast<size_t>(cfg.m), 0.0);
    for (const auto& [i, v] : taps)
      for (long n = 1; n <= cfg.m; ++n)
        x[static_cast<size_t>(n - 1)] +=
            v * z[static_cast<size_t>(n - i - j_lo)];
    return assemble(cfg, L, std::move(x));
  }

  std::vector<double> z = draw_innovations(cfg, 1 - L, cfg.m + L);
  const long kernel_len = 2 * L + 1;
  const double direct_cost =
      static_cast<double>(cfg.m) * static_cast<double>(kernel_len);
  if (direct_cost <= 6.7e7) {
    return assemble(cfg, L, convolve_reference(cfg.fam, L, z, cfg.m));
  }
  std::vector<double> kern(static_cast<size_t>(kernel_len));
  for (long t = 0; t < kernel_len; ++t)
    kern[static_cast<size_t>(t)] = cfg.fam.phi(t - L);
  std::vector<double> conv = fft_convolve(kern, z);
  // X_n sits at offset n + 2L - 1 of the full linear convolution.
  std::vector<double> x(static_cast<size_t>(cfg.m));
  for (long n = 1; n <= cfg.m; ++n)
    x[static_cast<size_t>(n - 1)] = conv[static_cast<size_t>(n + 2 * L - 1)];
  return assemble(cfg, L, std::move(x));
}

std::pair<Path, double> tilted_sample_path(const PathConfig& cfg,
                                           double theta) {
  if (cfg.fam.kind() != FamilyKind::FiniteLag)
    throw UnsupportedFamily(
        "exponential tilting is offered for i.i.d./finite-lag families");
  if (!cfg.model.mgf_domain().contains(theta))
    throw InvalidParameter("tilt outside the log-MGF domain interior");
  const long L = resolve_truncation(cfg);
  std::vector<std::pair<long, double>> taps;
  for (const auto& t : cfg.fam.taps())
    if (std::labs(t.first) <= L) taps.push_back(t);
  if (taps.empty())
    return {assemble(cfg, L, std::vector<double>(cfg.m, 0.0)), 0.0};
  long i_min = taps.front().first, i_max = taps.front().first;
  for (const auto& [i, v] : taps) {
    i_min = std::min(i_min, i);
    i_max = std::max(i_max, i);
  }
  long j_lo = 1 - i_max, j_hi = cfg.m - i_min;

  CounterRng rng(cfg.seed, cfg.path_index);
  const double lam = cfg.model.log_mgf(theta);
  std::vector<double> z(static_cast<size_t>(j_hi - j_lo + 1));
  double llr = 0.0;
  for (long j = j_lo; j <= j_hi; ++j) {
    double zj = cfg.model.sample_tilted(rng, j, theta);
    z[static_cast<size_t>(j - j_lo)] = zj;
    llr += theta * zj - lam;
  }
  std::vector<double> x(static_cast<size_t>(cfg.m), 0.0);
  for (const auto& [i, v] : taps)
    for (long n = 1; n <= cfg.m; ++n)
      x[static_cast<size_t>(n - 1)] += v * z[static_cast<size_t>(n - i - j_lo)];
  return {assemble(cfg, L, std::move(x)), llr};
}

std::vector<Path> sample_path_batch(const PathConfig& cfg, long n_paths,
                                    Exec exec) {
  std::vector<Path> out(static_cast<size_t>(n_paths));
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n_paths; ++k) {
      PathConfig c = cfg;
      c.path_index = cfg.path_index + static_cast<uint64_t>(k);
      out[static_cast<size_t>(k)] = sample_path(c);
    }
  } else {
    for (long k = 0; k < n_paths; ++k) {
      PathConfig c = cfg;
      c.path_index = cfg.path_index + static_cast<uint64_t>(k);
      out[static_cast<size_t>(k)] = sample_path(c);
    }
  }
  return out;
}

}  // namespace masim
