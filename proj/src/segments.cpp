#include "masim/segments.hpp"

#include <algorithm>
#include <cmath>

namespace masim {

namespace {

bool linear_normalization(const RegimeSpec& reg) {
  return reg.a(2) == 2.0 && reg.a(3) == 3.0 && reg.a(17) == 17.0;
}

// Smallest k in [0, limit] with pmin[k] strictly below (or at most) x;
// pmin is nonincreasing. Returns -1 when none qualifies.
long first_below(const std::vector<double>& pmin, long limit, double x,
                 bool closed) {
  auto ok = [&](long k) {
    return closed ? pmin[static_cast<size_t>(k)] <= x
                  : pmin[static_cast<size_t>(k)] < x;
  };
  if (!ok(limit)) return -1;
  long lo = 0, hi = limit;
  while (lo < hi) {
    long mid = lo + (hi - lo) / 2;
    if (ok(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace

SegmentResult longest_segment_exact(const std::vector<double>& s,
                                    const TargetSet& set,
                                    const RegimeSpec& reg, long m, long cap) {
  if (set.dim() != 1)
    throw UnsupportedSet("segment scans take scalar-projected paths");
  if (m < 0) m = static_cast<long>(s.size()) - 1;
  if (m + 1 > static_cast<long>(s.size()))
    throw InvalidParameter("prefix-sum array shorter than m");
  if (m > cap)
    throw InvalidParameter(
        "exact segment scan capped at m = " + std::to_string(cap) +
        "; raise the cap deliberately for larger inputs");
  const double level = set.level();
  const bool closed = set.is_closed();
  const double v0 = set.direction()(0);

  SegmentResult best;
  if (linear_normalization(reg) && v0 == 1.0) {
    // Shared predicate with the fast algorithm: S~_l > S~_{l-n}.
    std::vector<double> shifted(static_cast<size_t>(m) + 1);
    for (long k = 0; k <= m; ++k)
      shifted[static_cast<size_t>(k)] =
          s[static_cast<size_t>(k)] - level * static_cast<double>(k);
    for (long n = 1; n <= m; ++n) {
      for (long l = n; l <= m; ++l) {
        double d = shifted[static_cast<size_t>(l)] -
                   shifted[static_cast<size_t>(l - n)];
        if ((closed ? d >= 0.0 : d > 0.0) && n > best.length) {
          best.length = n;
          best.end = l;
          best.found = true;
        }
      }
    }
    return best;
  }

  for (long n = 1; n <= m; ++n) {
    double an = reg.a(n);
    double mx = -kInf;
    long arg = 0;
    for (long l = n; l <= m; ++l) {
      double d = v0 * (s[static_cast<size_t>(l)] - s[static_cast<size_t>(l - n)]);
      if (d > mx) {
        mx = d;
        arg = l;
      }
    }
    bool qualifies = closed ? mx >= level * an : mx > level * an;
    if (qualifies) {
      best.length = n;
      best.end = arg;
      best.found = true;
    }
  }
  return best;
}

SegmentResult longest_segment_fast(const std::vector<double>& s, double y,
                                   long m, bool closed) {
  if (m < 0) m = static_cast<long>(s.size()) - 1;
  if (m + 1 > static_cast<long>(s.size()))
    throw InvalidParameter("prefix-sum array shorter than m");
  std::vector<double> pmin(static_cast<size_t>(m) + 1);
  std::vector<double> shifted(static_cast<size_t>(m) + 1);
  SegmentResult best;
  shifted[0] = 0.0;
  pmin[0] = 0.0;
  for (long l = 1; l <= m; ++l) {
    shifted[static_cast<size_t>(l)] =
        s[static_cast<size_t>(l)] - y * static_cast<double>(l);
    long k = first_below(pmin, l - 1, shifted[static_cast<size_t>(l)], closed);
    if (k >= 0 && l - k > best.length) {
      best.length = l - k;
      best.end = l;
      best.found = true;
    }
    pmin[static_cast<size_t>(l)] =
        std::min(pmin[static_cast<size_t>(l - 1)],
                 shifted[static_cast<size_t>(l)]);
  }
  return best;
}

namespace {

// Scan one materialized prefix; returns 0 when no window qualifies.
long first_hit_scan(const std::vector<double>& s, const TargetSet& set,
                    const RegimeSpec& reg, long r, long m) {
  const double level = set.level();
  const bool closed = set.is_closed();
  if (linear_normalization(reg) && set.direction()(0) == 1.0) {
    std::vector<double> pmin(static_cast<size_t>(m) + 1);
    pmin[0] = 0.0;
    for (long l = 1; l <= m; ++l) {
      double sl = s[static_cast<size_t>(l)] - level * static_cast<double>(l);
      if (l >= r) {
        double ref = pmin[static_cast<size_t>(l - r)];
        if (closed ? sl >= ref : sl > ref) return l;
      }
      pmin[static_cast<size_t>(l)] =
          std::min(pmin[static_cast<size_t>(l - 1)], sl);
    }
    return 0;
  }
  for (long l = r; l <= m; ++l) {
    for (long n = r; n <= l; ++n) {
      double d = s[static_cast<size_t>(l)] - s[static_cast<size_t>(l - n)];
      double an = reg.a(n);
      if (closed ? d >= level * an : d > level * an) return l;
    }
  }
  return 0;
}

}  // namespace

long first_hitting_time(const std::vector<double>& s, const TargetSet& set,
                        const RegimeSpec& reg, long r) {
  if (r < 1) throw InvalidParameter("first_hitting_time: r must be >= 1");
  if (set.dim() != 1)
    throw UnsupportedSet("segment scans take scalar-projected paths");
  long m = static_cast<long>(s.size()) - 1;
  long hit = first_hit_scan(s, set, reg, r, m);
  if (hit == 0)
    throw NotFoundWithinBudget(
        "no qualifying window of length >= " + std::to_string(r), m);
  return hit;
}

long first_hitting_time(const PathConfig& cfg, const TargetSet& set,
                        const RegimeSpec& reg, long r, long budget) {
  if (r < 1) throw InvalidParameter("first_hitting_time: r must be >= 1");
  if (set.dim() != 1)
    throw UnsupportedSet("segment scans take scalar-projected paths");
  long block = std::max<long>(r * 2, 1024);
  while (true) {
    long m = std::min(block, budget);
    PathConfig c = cfg;
    c.m = m;
    Path p = sample_path(c);
    long hit = first_hit_scan(p.s, set, reg, r, m);
    if (hit > 0) return hit;
    if (m >= budget)
      throw NotFoundWithinBudget("no qualifying window of length >= " +
                                     std::to_string(r),
                                 budget);
    block *= 2;
  }
}

std::vector<long> segment_lengths_on_grid(const Path& path,
                                          const TargetSet& set,
                                          const RegimeSpec& reg,
                                          const std::vector<long>& m_grid) {
  if (set.dim() != 1)
    throw UnsupportedSet("segment scans take scalar-projected paths");
  std::vector<long> out(m_grid.size(), 0);
  const long m_max = *std::max_element(m_grid.begin(), m_grid.end());
  if (m_max + 1 > static_cast<long>(path.s.size()))
    throw InvalidParameter("path shorter than the requested grid");
  const double level = set.level();
  const bool closed = set.is_closed();

  if (linear_normalization(reg) && set.direction()(0) == 1.0) {
    std::vector<double> pmin(static_cast<size_t>(m_max) + 1);
    pmin[0] = 0.0;
    long best = 0;
    size_t g = 0;
    std::vector<std::pair<long, size_t>> grid_sorted;
    for (size_t i = 0; i < m_grid.size(); ++i)
      grid_sorted.emplace_back(m_grid[i], i);
    std::sort(grid_sorted.begin(), grid_sorted.end());
    for (long l = 1; l <= m_max; ++l) {
      double sl =
          path.s[static_cast<size_t>(l)] - level * static_cast<double>(l);
      long k = first_below(pmin, l - 1, sl, closed);
      if (k >= 0) best = std::max(best, l - k);
      pmin[static_cast<size_t>(l)] =
          std::min(pmin[static_cast<size_t>(l - 1)], sl);
      while (g < grid_sorted.size() && grid_sorted[g].first == l)
        out[grid_sorted[g++].second] = best;
    }
    return out;
  }

  for (size_t i = 0; i < m_grid.size(); ++i) {
    SegmentResult r = longest_segment_exact(path.s, set, reg, m_grid[i]);
    out[i] = r.length;
  }
  return out;
}

std::vector<GrowthRow> growth_statistic(const PathConfig& proto, long n_paths,
                                        const TargetSet& set,
                                        const RegimeSpec& reg,
                                        const std::vector<long>& m_grid,
                                        Exec exec) {
  if (n_paths < 2)
    throw InvalidParameter("growth_statistic: need at least 2 paths");
  const long m_max = *std::max_element(m_grid.begin(), m_grid.end());
  std::vector<std::vector<double>> stat(
      static_cast<size_t>(n_paths),
      std::vector<double>(m_grid.size(), 0.0));

  auto run_one = [&](long k) {
    PathConfig c = proto;
    c.m = m_max;
    c.path_index = proto.path_index + static_cast<uint64_t>(k);
    Path p = sample_path(c);
    std::vector<long> lengths = segment_lengths_on_grid(p, set, reg, m_grid);
    for (size_t i = 0; i < m_grid.size(); ++i) {
      long R = lengths[i];
      stat[static_cast<size_t>(k)][i] =
          R == 0 ? 0.0
                 : reg.b(R) / std::log(static_cast<double>(m_grid[i]));
    }
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n_paths; ++k) run_one(k);
  } else {
    for (long k = 0; k < n_paths; ++k) run_one(k);
  }

  std::vector<GrowthRow> rows(m_grid.size());
  for (size_t i = 0; i < m_grid.size(); ++i) {
    double mean = 0.0;
    for (long k = 0; k < n_paths; ++k)
      mean += stat[static_cast<size_t>(k)][i];
    mean /= static_cast<double>(n_paths);
    double var = 0.0;
    for (long k = 0; k < n_paths; ++k) {
      double d = stat[static_cast<size_t>(k)][i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n_paths - 1);
    rows[i] = {m_grid[i], mean, std::sqrt(var), n_paths};
  }
  return rows;
}

}  // namespace masim
