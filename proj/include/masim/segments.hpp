#pragma once

#include <vector>

#include "masim/simulate.hpp"

namespace masim {

/// Longest qualifying window: length n and its right endpoint l with
/// (S_l - S_{l-n})/a_n in A. `found` is false (length 0) when no window
/// qualifies — the empty-sup convention.
struct SegmentResult {
  long length = 0;
  long end = 0;
  bool found = false;
};

/// Exact O(m^2) scan over all window lengths with incremental window maxima.
/// `s` holds prefix sums s[0..m], s[0] = 0. Capped by default; pass a larger
/// cap deliberately.
SegmentResult longest_segment_exact(const std::vector<double>& s,
                                    const TargetSet& set,
                                    const RegimeSpec& reg, long m = -1,
                                    long cap = 50000);

/// O(m log m) specialization for half-lines with linear normalization
/// a_n = n: on the shifted sums S~_k = S_k - y k a window qualifies iff its
/// left end sits strictly below its right end, so the earliest qualifying
/// left end is found by binary search on the nonincreasing prefix-minimum
/// array. Agrees with the exact scan window for window.
SegmentResult longest_segment_fast(const std::vector<double>& s, double y,
                                   long m = -1, bool closed = false);

/// First l admitting a qualifying window of length >= r (dual to R_m).
/// Streams the path in doubling blocks until success or `budget` steps.
long first_hitting_time(const PathConfig& cfg, const TargetSet& set,
                        const RegimeSpec& reg, long r, long budget);

/// Same search over an already materialized prefix-sum array (s[0] = 0);
/// the budget is the array length.
long first_hitting_time(const std::vector<double>& s, const TargetSet& set,
                        const RegimeSpec& reg, long r);

/// Per-m growth statistic b_{R_m} / log m across a batch of paths.
struct GrowthRow {
  long m = 0;
  double mean_stat = 0.0;
  double sd_stat = 0.0;
  long n_paths = 0;
};

std::vector<GrowthRow> growth_statistic(const PathConfig& proto, long n_paths,
                                        const TargetSet& set,
                                        const RegimeSpec& reg,
                                        const std::vector<long>& m_grid,
                                        Exec exec = Exec::Parallel);

/// R_m for one path at each grid point (single streaming pass when the
/// normalization is linear).
std::vector<long> segment_lengths_on_grid(const Path& path,
                                          const TargetSet& set,
                                          const RegimeSpec& reg,
                                          const std::vector<long>& m_grid);

}  // namespace masim
