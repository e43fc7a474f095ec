#pragma once

#include <utility>
#include <vector>

#include "masim/model.hpp"

namespace masim {

/// One sample-path request. Innovation j of path k under seed s is always
/// the same number, whatever the thread count or how much of the path has
/// been materialized.
struct PathConfig {
  CoefficientFamily fam;
  InnovationModel model;
  long m = 1000;          // path length
  long truncation = 0;    // innovation window half-width L; <= 0 chooses the
                          // family default
  uint64_t seed = 1;
  uint64_t path_index = 0;
  Regime tag = Regime::S1;  // carried as metadata
  double mu = 0.0;          // drift used by Y_n = S_n - a_n mu
};

struct Path {
  std::vector<double> x;  // x[n-1] = X_n
  std::vector<double> s;  // s[0] = 0, s[n] = X_1 + ... + X_n
  double tau_err = 0.0;   // truncation diagnostic (see sample_path)
  long truncation = 0;
  uint64_t seed = 0;
  uint64_t path_index = 0;
};

/// Truncated moving-average path X_n = sum_{|i|<=L} phi_i Z_{n-i}. The
/// truncation diagnostic is sum_{|i|>L} |phi_i| for absolutely summable
/// families and the window-relevant envelope ratio
/// (Psi_{L+m} - Psi_L)/Psi_m for balanced-power families.
Path sample_path(const PathConfig& cfg);

/// Path with innovations drawn from the exponentially tilted law; returns
/// the total log-likelihood ratio sum_j (theta Z_j - Lambda(theta)) over
/// every innovation consumed. i.i.d./FiniteLag families only.
std::pair<Path, double> tilted_sample_path(const PathConfig& cfg,
                                           double theta);

/// Batch of paths path_index = cfg.path_index + k, k < n_paths. The
/// parallel and serial policies produce bit-identical output.
std::vector<Path> sample_path_batch(const PathConfig& cfg, long n_paths,
                                    Exec exec = Exec::Parallel);

/// Reference direct convolution used as the oracle for the transform-based
/// path builder: X_n = sum_{|i|<=L} phi_i z[(n - i) - (1 - L)] with z
/// holding Z_{1-L} .. Z_{m+L}.
std::vector<double> convolve_reference(const CoefficientFamily& fam, long L,
                                       const std::vector<double>& z, long m);

}  // namespace masim
