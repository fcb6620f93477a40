#pragma once

// Slow, obviously-correct reference computations used by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "aqd/forest.hpp"
#include "aqd/geodata.hpp"
#include "aqd/terrain.hpp"

namespace oracle {

// --- trend statistics ------------------------------------------------------

inline std::int64_t mk_s(std::span<const double> x) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) s += (x[j] > x[i]) - (x[j] < x[i]);
  }
  return s;
}

inline double mk_variance(std::span<const double> x) {
  std::map<double, std::int64_t> groups;
  for (double v : x) ++groups[v];
  const auto n = static_cast<double>(x.size());
  double var = n * (n - 1) * (2 * n + 5);
  for (const auto& [v, t] : groups) {
    const auto tt = static_cast<double>(t);
    var -= tt * (tt - 1) * (2 * tt + 5);
  }
  return var / 18.0;
}

inline double sen_slope(std::span<const int> t, std::span<const double> x) {
  std::vector<double> s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) s.push_back((x[j] - x[i]) / static_cast<double>(t[j] - t[i]));
  }
  std::sort(s.begin(), s.end());
  const auto m = s.size();
  return m % 2 ? s[m / 2] : (s[m / 2 - 1] + s[m / 2]) / 2.0;
}

// --- statistics ------------------------------------------------------------

inline double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double pop_std(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline double r2(std::span<const double> y, std::span<const double> p) {
  const double m = mean(y);
  double res = 0, tot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    res += (y[i] - p[i]) * (y[i] - p[i]);
    tot += (y[i] - m) * (y[i] - m);
  }
  return 1.0 - res / tot;
}

inline double mse(std::span<const double> y, std::span<const double> p) {
  double res = 0;
  for (std::size_t i = 0; i < y.size(); ++i) res += (y[i] - p[i]) * (y[i] - p[i]);
  return res / static_cast<double>(y.size());
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// --- trees -----------------------------------------------------------------

// Recursive descent over the node array.
inline double traverse(const aqd::forest::Tree& t, std::span<const double> row, std::int32_t node = 0) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.feature < 0) return n.value;
  return traverse(t, row, row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
}

inline double forest_predict(const aqd::forest::Forest& f, std::span<const double> row) {
  double s = 0;
  for (const auto& t : f.trees()) s += traverse(t, row);
  return s / static_cast<double>(f.trees().size());
}

// --- terrain ---------------------------------------------------------------

inline std::optional<std::size_t> downstream(const aqd::terrain::FlowField& f, std::size_t i) {
  const int d = f.directions[i];
  if (d < 0) return std::nullopt;
  static constexpr int dr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr int dc[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  const auto nc = static_cast<long>(f.spec.ncols);
  const long r = static_cast<long>(i) / nc + dr[d];
  const long c = static_cast<long>(i) % nc + dc[d];
  return static_cast<std::size_t>(r * nc + c);
}

// Walks every cell's path to its outlet, crediting each visited cell.
// Returns nullopt if any path loops.
inline std::optional<std::vector<double>> traced_accumulation(const aqd::terrain::FlowField& f) {
  const std::size_t n = f.directions.size();
  std::vector<double> acc(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t i = s;
    std::size_t steps = 0;
    while (true) {
      acc[i] += 1.0;
      auto d = downstream(f, i);
      if (!d) break;
      i = *d;
      if (++steps > n) return std::nullopt;
    }
  }
  return acc;
}

// Steepest D8 drop with the lowest-index tie-break; nullopt where no neighbor is lower.
inline std::optional<int> steepest_direction(const aqd::Raster& dem, std::size_t r, std::size_t c) {
  static constexpr int dr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr int dc[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  std::optional<int> best;
  double best_drop = 0.0;
  for (int k = 0; k < 8; ++k) {
    const long nr = static_cast<long>(r) + dr[k];
    const long nc = static_cast<long>(c) + dc[k];
    if (nr < 0 || nc < 0 || nr >= static_cast<long>(dem.nrows()) || nc >= static_cast<long>(dem.ncols())) continue;
    const double dist = (dr[k] != 0 && dc[k] != 0) ? std::sqrt(2.0) : 1.0;
    const double drop = (dem(r, c) - dem(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc))) / dist;
    if (drop > best_drop) {
      best_drop = drop;
      best = k;
    }
  }
  return best;
}

// True when every cell has a non-ascending 8-connected path to the edge.
inline bool drains_to_edge(const aqd::Raster& z) {
  const long R = static_cast<long>(z.nrows()), C = static_cast<long>(z.ncols());
  std::vector<char> ok(z.size(), 0);
  for (long r = 0; r < R; ++r) {
    for (long c = 0; c < C; ++c) {
      if (r == 0 || c == 0 || r == R - 1 || c == C - 1) ok[static_cast<std::size_t>(r * C + c)] = 1;
    }
  }
  // Relax until nothing changes: a cell drains if some neighbor no higher drains.
  for (bool changed = true; changed;) {
    changed = false;
    for (long r = 0; r < R; ++r) {
      for (long c = 0; c < C; ++c) {
        const auto i = static_cast<std::size_t>(r * C + c);
        if (ok[i]) continue;
        for (long a = -1; a <= 1 && !ok[i]; ++a) {
          for (long b = -1; b <= 1; ++b) {
            const auto j = static_cast<std::size_t>((r + a) * C + (c + b));
            if ((a || b) && ok[j] && z[j] <= z[i]) {
              ok[i] = 1;
              changed = true;
              break;
            }
          }
        }
      }
    }
  }
  return std::all_of(ok.begin(), ok.end(), [](char v) { return v; });
}

inline std::vector<double> all_pairs_distance(const aqd::Raster& mask, double cell_m) {
  std::vector<double> out(mask.size(), std::numeric_limits<double>::infinity());
  const auto C = mask.ncols();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (mask[j] != 1.0) continue;
      const double dr = static_cast<double>(i / C) - static_cast<double>(j / C);
      const double dc = static_cast<double>(i % C) - static_cast<double>(j % C);
      out[i] = std::min(out[i], std::sqrt(dr * dr + dc * dc) * cell_m);
    }
  }
  return out;
}

inline std::vector<double> window_tri(const aqd::Raster& dem) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dem.size(); ++i) lo = std::min(lo, dem[i]);
  std::vector<double> out(dem.size());
  const long R = static_cast<long>(dem.nrows()), C = static_cast<long>(dem.ncols());
  for (long r = 0; r < R; ++r) {
    for (long c = 0; c < C; ++c) {
      double mx = -1e300, mn = 1e300;
      for (long a = std::max(0L, r - 1); a <= std::min(R - 1, r + 1); ++a) {
        for (long b = std::max(0L, c - 1); b <= std::min(C - 1, c + 1); ++b) {
          const double v = dem(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) - lo;
          mx = std::max(mx, v);
          mn = std::min(mn, v);
        }
      }
      out[static_cast<std::size_t>(r * C + c)] = std::sqrt(mx * mx - mn * mn);
    }
  }
  return out;
}

inline aqd::Raster random_dem(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double cell = 30.0) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  aqd::GridSpec spec{cols, rows, 0.0, 0.0, cell, -9999.0};
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = std::round(u(rng) * 8.0) / 8.0;  // coarse steps make flats and ties
  return aqd::Raster(spec, std::move(v));
}

}  // namespace oracle
