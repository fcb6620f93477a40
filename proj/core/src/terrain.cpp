#include "aqd/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <tuple>

#include "aqd/errors.hpp"

namespace aqd::terrain {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Grid {
  std::size_t nrows;
  std::size_t ncols;

  bool inside(long r, long c) const noexcept {
    return r >= 0 && c >= 0 && r < static_cast<long>(nrows) && c < static_cast<long>(ncols);
  }
  std::size_t idx(long r, long c) const noexcept { return static_cast<std::size_t>(r) * ncols + static_cast<std::size_t>(c); }
};

Grid grid_of(const Raster& r) { return {r.nrows(), r.ncols()}; }

GridSpec output_spec(const GridSpec& in) {
  GridSpec s = in;
  s.nodata = -9999.0;
  return s;
}

bool neighbor_valid(const Raster& r, const Grid& g, long row, long col) {
  return g.inside(row, col) && r.valid(g.idx(row, col));
}

// A cell on the raster boundary or touching nodata can drain off the valid surface.
bool is_boundary(const Raster& r, const Grid& g, long row, long col) {
  for (int k = 0; k < 8; ++k) {
    if (!neighbor_valid(r, g, row + kDRow[k], col + kDCol[k])) return true;
  }
  return false;
}

}  // namespace

std::optional<std::size_t> FlowField::downstream(std::size_t i) const noexcept {
  const auto d = directions[i];
  if (d < 0) return std::nullopt;
  const long r = static_cast<long>(i / spec.ncols) + kDRow[d];
  const long c = static_cast<long>(i % spec.ncols) + kDCol[d];
  return static_cast<std::size_t>(r) * spec.ncols + static_cast<std::size_t>(c);
}

Raster fill_pits(const Raster& dem) {
  const Grid g = grid_of(dem);
  if (dem.count_valid() == 0) throw DataError("fill_pits: empty input (all cells are nodata)");

  Raster out = dem;
  std::vector<std::uint8_t> closed(dem.size(), 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;

  for (long r = 0; r < static_cast<long>(g.nrows); ++r) {
    for (long c = 0; c < static_cast<long>(g.ncols); ++c) {
      const auto i = g.idx(r, c);
      if (dem.valid(i) && is_boundary(dem, g, r, c)) {
        closed[i] = 1;
        open.emplace(out[i], i);
      }
    }
  }
  while (!open.empty()) {
    const auto [z, i] = open.top();
    open.pop();
    const long r = static_cast<long>(i / g.ncols);
    const long c = static_cast<long>(i % g.ncols);
    for (int k = 0; k < 8; ++k) {
      const long nr = r + kDRow[k];
      const long nc = c + kDCol[k];
      if (!g.inside(nr, nc)) continue;
      const auto n = g.idx(nr, nc);
      if (closed[n] || !dem.valid(n)) continue;
      closed[n] = 1;
      out[n] = std::max(out[n], z);
      open.emplace(out[n], n);
    }
  }
  return out;
}

FlowField flow_accumulation(const Raster& dem, const TerrainConfig& cfg) {
  const Grid g = grid_of(dem);
  FlowField flow;
  flow.spec = dem.spec();
  flow.cell_m = cfg.cell_m(dem);
  flow.directions.assign(dem.size(), kNoData);

  constexpr std::int8_t kUnresolved = -3;
  std::deque<std::size_t> frontier;
  for (long r = 0; r < static_cast<long>(g.nrows); ++r) {
    for (long c = 0; c < static_cast<long>(g.ncols); ++c) {
      const auto i = g.idx(r, c);
      if (!dem.valid(i)) continue;
      double best = 0.0;
      std::int8_t dir = kUnresolved;
      for (int k = 0; k < 8; ++k) {
        const long nr = r + kDRow[k];
        const long nc = c + kDCol[k];
        if (!neighbor_valid(dem, g, nr, nc)) continue;
        const double drop = (dem[i] - dem[g.idx(nr, nc)]) / ((k & 1) ? kSqrt2 : 1.0);
        if (drop > best) {
          best = drop;
          dir = static_cast<std::int8_t>(k);
        }
      }
      if (dir == kUnresolved && is_boundary(dem, g, r, c)) dir = kOutlet;
      flow.directions[i] = dir;
      if (dir != kUnresolved) frontier.push_back(i);
    }
  }

  // Flats: breadth-first from drainable cells across equal elevations, so every
  // flat cell points one step closer to its nearest outlet.
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop_front();
    const long r = static_cast<long>(u / g.ncols);
    const long c = static_cast<long>(u % g.ncols);
    for (int k = 0; k < 8; ++k) {
      const long nr = r + kDRow[k];
      const long nc = c + kDCol[k];
      if (!g.inside(nr, nc)) continue;
      const auto v = g.idx(nr, nc);
      if (flow.directions[v] != kUnresolved || dem[v] != dem[u]) continue;
      flow.directions[v] = static_cast<std::int8_t>((k + 4) % 8);
      frontier.push_back(v);
    }
  }
  for (std::size_t i = 0; i < dem.size(); ++i) {
    if (flow.directions[i] == kUnresolved) {
      throw TopologyError("unresolved flat with no outlet", i / g.ncols, i % g.ncols);
    }
  }

  std::vector<std::uint32_t> indegree(dem.size(), 0);
  for (std::size_t i = 0; i < dem.size(); ++i) {
    if (auto d = flow.downstream(i)) ++indegree[*d];
  }
  std::vector<double> acc(dem.size(), 0.0);
  std::vector<std::size_t> queue;
  queue.reserve(dem.size());
  for (std::size_t i = 0; i < dem.size(); ++i) {
    if (dem.valid(i)) {
      acc[i] = 1.0;
      if (indegree[i] == 0) queue.push_back(i);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto i = queue[head];
    if (auto d = flow.downstream(i)) {
      acc[*d] += acc[i];
      if (--indegree[*d] == 0) queue.push_back(*d);
    }
  }
  GridSpec spec = output_spec(dem.spec());
  for (std::size_t i = 0; i < dem.size(); ++i) {
    if (!dem.valid(i)) acc[i] = spec.nodata;
  }
  flow.accumulation = Raster(spec, std::move(acc));
  return flow;
}

SlopeField slope_percent(const Raster& dem, const TerrainConfig& cfg) {
  const Grid g = grid_of(dem);
  const GridSpec spec = output_spec(dem.spec());
  SlopeField s;
  s.cell_m = cfg.cell_m(dem);
  s.percent = Raster(spec, spec.nodata);
  s.radians = Raster(spec, spec.nodata);
  s.gx = Raster(spec, spec.nodata);
  s.gy = Raster(spec, spec.nodata);

  auto value = [&](long r, long c) -> std::optional<double> {
    if (!neighbor_valid(dem, g, r, c)) return std::nullopt;
    return dem[g.idx(r, c)];
  };
  // Weighted (1,2,1) average of per-line differences, one-sided where a
  // neighbor is missing. Equals the Horn kernel when all eight are present.
  auto line_gradient = [&](long r0, long c0, long dr, long dc, long sr, long sc) {
    double num = 0.0;
    double wsum = 0.0;
    for (long off = -1; off <= 1; ++off) {
      const long r = r0 + off * sr;
      const long c = c0 + off * sc;
      const auto mid = value(r, c);
      if (!mid) continue;
      const auto fwd = value(r + dr, c + dc);
      const auto back = value(r - dr, c - dc);
      double d;
      if (fwd && back) {
        d = 0.5 * (*fwd - *back);
      } else if (fwd) {
        d = *fwd - *mid;
      } else if (back) {
        d = *mid - *back;
      } else {
        continue;
      }
      const double w = off == 0 ? 2.0 : 1.0;
      num += w * d;
      wsum += w;
    }
    return std::pair{num, wsum};
  };

  for (long r = 0; r < static_cast<long>(g.nrows); ++r) {
    for (long c = 0; c < static_cast<long>(g.ncols); ++c) {
      const auto i = g.idx(r, c);
      if (!dem.valid(i)) continue;
      bool any_neighbor = false;
      for (int k = 0; k < 8 && !any_neighbor; ++k) any_neighbor = neighbor_valid(dem, g, r + kDRow[k], c + kDCol[k]);
      if (!any_neighbor) continue;
      // East is +col; north is -row.
      const auto [nx, wx] = line_gradient(r, c, 0, 1, 1, 0);
      const auto [ny, wy] = line_gradient(r, c, -1, 0, 0, 1);
      const double gx = wx > 0.0 ? nx / wx : 0.0;
      const double gy = wy > 0.0 ? ny / wy : 0.0;
      const double rise = std::sqrt(gx * gx + gy * gy);
      s.gx[i] = gx;
      s.gy[i] = gy;
      s.percent[i] = 100.0 * rise / s.cell_m;
      s.radians[i] = std::atan(rise / s.cell_m);
    }
  }
  return s;
}

Raster aspect(const SlopeField& slope) {
  Raster out(slope.gx.spec(), slope.gx.nodata());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!slope.gx.valid(i)) continue;
    const double gx = slope.gx[i];
    const double gy = slope.gy[i];
    if (gx == 0.0 && gy == 0.0) {
      out[i] = -1.0;
      continue;
    }
    // Downslope direction, clockwise from north.
    double deg = std::atan2(-gx, -gy) * 180.0 / kPi;
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg -= 360.0;
    out[i] = deg;
  }
  return out;
}

CurvatureField curvature(const Raster& dem, const TerrainConfig& cfg) {
  const Grid g = grid_of(dem);
  const GridSpec spec = output_spec(dem.spec());
  const double L = cfg.cell_m(dem);
  CurvatureField out;
  out.total = Raster(spec, spec.nodata);
  out.plan = Raster(spec, spec.nodata);
  out.profile = Raster(spec, spec.nodata);
  out.one_sided.assign(dem.size(), 0);

  for (long r = 0; r < static_cast<long>(g.nrows); ++r) {
    for (long c = 0; c < static_cast<long>(g.ncols); ++c) {
      const auto i = g.idx(r, c);
      if (!dem.valid(i)) continue;
      const double z5 = dem[i];
      // z[dr+1][dc+1]; missing neighbors are linearly extrapolated through the center.
      double z[3][3];
      bool missing = false;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (neighbor_valid(dem, g, r + dr, c + dc)) {
            z[dr + 1][dc + 1] = dem[g.idx(r + dr, c + dc)];
          } else {
            missing = true;
            z[dr + 1][dc + 1] = std::numeric_limits<double>::quiet_NaN();
          }
        }
      }
      if (missing) {
        out.one_sided[i] = 1;
        ++out.one_sided_count;
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) {
            if (!std::isnan(z[a][b])) continue;
            const double opposite = z[2 - a][2 - b];
            z[a][b] = std::isnan(opposite) ? z5 : 2.0 * z5 - opposite;
          }
        }
      }
      const double z1 = z[0][0], z2 = z[0][1], z3 = z[0][2];
      const double z4 = z[1][0], z6 = z[1][2];
      const double z7 = z[2][0], z8 = z[2][1], z9 = z[2][2];
      const double D = ((z4 + z6) / 2.0 - z5) / (L * L);
      const double E = ((z2 + z8) / 2.0 - z5) / (L * L);
      const double F = (-z1 + z3 + z7 - z9) / (4.0 * L * L);
      const double G = (z6 - z4) / (2.0 * L);
      const double H = (z2 - z8) / (2.0 * L);
      const double zxx = 2.0 * D;
      const double zyy = 2.0 * E;
      const double zxy = F;
      out.total[i] = -(zxx + zyy);
      const double p2q2 = G * G + H * H;
      if (p2q2 > 1e-24) {
        out.profile[i] = -(zxx * G * G + 2.0 * zxy * G * H + zyy * H * H) / p2q2;
        out.plan[i] = -(zxx * H * H - 2.0 * zxy * G * H + zyy * G * G) / p2q2;
      } else {
        out.profile[i] = 0.0;
        out.plan[i] = 0.0;
      }
    }
  }
  return out;
}

double tri_value(double window_max, double window_min) {
  return std::sqrt(std::max(0.0, window_max * window_max - window_min * window_min));
}

Raster tri(const Raster& dem, const TerrainConfig& cfg) {
  const Grid g = grid_of(dem);
  const GridSpec spec = output_spec(dem.spec());
  Raster out(spec, spec.nodata);
  double shift = kInf;
  for (std::size_t i = 0; i < dem.size(); ++i) {
    if (dem.valid(i)) shift = std::min(shift, dem[i]);
  }
  for (long r = 0; r < static_cast<long>(g.nrows); ++r) {
    for (long c = 0; c < static_cast<long>(g.ncols); ++c) {
      const auto i = g.idx(r, c);
      if (!dem.valid(i)) continue;
      if (cfg.tri == TriVariant::literal) {
        double mx = -kInf;
        double mn = kInf;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (!neighbor_valid(dem, g, r + dr, c + dc)) continue;
            const double v = dem[g.idx(r + dr, c + dc)] - shift;
            mx = std::max(mx, v);
            mn = std::min(mn, v);
          }
        }
        out[i] = tri_value(mx, mn);
      } else {
        double ss = 0.0;
        for (int k = 0; k < 8; ++k) {
          if (!neighbor_valid(dem, g, r + kDRow[k], c + kDCol[k])) continue;
          const double d = dem[g.idx(r + kDRow[k], c + kDCol[k])] - dem[i];
          ss += d * d;
        }
        out[i] = std::sqrt(ss);
      }
    }
  }
  return out;
}

double twi_value(double specific_area, double beta_rad, const TerrainConfig& cfg) {
  if (cfg.twi == TwiVariant::tangent) {
    const double beta = std::max(beta_rad, cfg.beta_min_deg * kPi / 180.0);
    return std::log(specific_area / std::tan(beta));
  }
  const double beta_deg = std::max(beta_rad * 180.0 / kPi, cfg.beta_min_deg);
  return std::log(specific_area / beta_deg);
}

double sti_value(double specific_area, double beta_rad) {
  return std::pow(specific_area / 22.13, 0.6) * std::pow(std::sin(beta_rad) / 0.0896, 1.3);
}

double spi_value(double specific_area, double beta_rad) { return specific_area * std::tan(beta_rad); }

namespace {
template <class Fn>
Raster per_cell_index(const FlowField& flow, const SlopeField& slope, Fn fn) {
  if (!flow.spec.same_grid(slope.radians.spec())) throw SchemaError("flow and slope grids differ");
  Raster out(slope.radians.spec(), slope.radians.nodata());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!slope.radians.valid(i) || !flow.accumulation.valid(i)) continue;
    out[i] = fn(flow.specific_area(i), slope.radians[i]);
  }
  return out;
}
}  // namespace

Raster twi(const FlowField& flow, const SlopeField& slope, const TerrainConfig& cfg) {
  return per_cell_index(flow, slope, [&](double as, double b) { return twi_value(as, b, cfg); });
}

Raster sti(const FlowField& flow, const SlopeField& slope) { return per_cell_index(flow, slope, sti_value); }

Raster spi(const FlowField& flow, const SlopeField& slope) { return per_cell_index(flow, slope, spi_value); }

Raster stream_mask(const FlowField& flow, double threshold) {
  Raster out(flow.accumulation.spec(), flow.accumulation.nodata());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (flow.accumulation.valid(i)) out[i] = flow.accumulation[i] >= threshold ? 1.0 : 0.0;
  }
  return out;
}

namespace {
double link_length(const FlowField& flow, std::size_t i) {
  const auto d = flow.directions[i];
  return (d >= 0 && (d & 1)) ? flow.cell_m * kSqrt2 : flow.cell_m;
}
bool is_stream(const Raster& streams, std::size_t i) { return streams.valid(i) && streams[i] > 0.5; }
}  // namespace

double drainage_density(const Raster& streams, const FlowField& flow, std::span<const std::size_t> zone) {
  if (zone.empty()) throw DataError("drainage_density: empty zone");
  if (!streams.spec().same_grid(flow.spec)) throw SchemaError("stream mask and flow grids differ");
  double length = 0.0;
  for (auto i : zone) {
    if (i >= streams.size()) throw DataError("drainage_density: zone index out of range");
    if (is_stream(streams, i)) length += link_length(flow, i);
  }
  const double area = static_cast<double>(zone.size()) * flow.cell_m * flow.cell_m;
  return length / area;
}

Raster drainage_density_raster(const Raster& streams, const FlowField& flow, std::size_t radius) {
  if (!streams.spec().same_grid(flow.spec)) throw SchemaError("stream mask and flow grids differ");
  const std::size_t nr = streams.nrows();
  const std::size_t nc = streams.ncols();
  // Integer summed-area tables (straight links, diagonal links, valid cells)
  // so that empty windows come out exactly zero.
  std::vector<std::int64_t> straight((nr + 1) * (nc + 1), 0);
  std::vector<std::int64_t> diag((nr + 1) * (nc + 1), 0);
  std::vector<std::int64_t> cnt((nr + 1) * (nc + 1), 0);
  auto at = [nc](std::size_t r, std::size_t c) { return r * (nc + 1) + c; };
  auto accumulate = [&](std::vector<std::int64_t>& t, std::size_t r, std::size_t c, std::int64_t v) {
    t[at(r + 1, c + 1)] = v + t[at(r, c + 1)] + t[at(r + 1, c)] - t[at(r, c)];
  };
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      const auto i = r * nc + c;
      const bool s = is_stream(streams, i);
      const bool d = s && flow.directions[i] >= 0 && (flow.directions[i] & 1);
      accumulate(straight, r, c, s && !d ? 1 : 0);
      accumulate(diag, r, c, d ? 1 : 0);
      accumulate(cnt, r, c, streams.valid(i) ? 1 : 0);
    }
  }
  auto box = [&](const std::vector<std::int64_t>& t, std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
    return static_cast<double>(t[at(r1, c1)] - t[at(r0, c1)] - t[at(r1, c0)] + t[at(r0, c0)]);
  };
  Raster out(streams.spec(), -9999.0);
  const double cell_area = flow.cell_m * flow.cell_m;
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      if (!streams.valid(r * nc + c)) continue;
      const std::size_t r0 = r >= radius ? r - radius : 0;
      const std::size_t c0 = c >= radius ? c - radius : 0;
      const std::size_t r1 = std::min(nr, r + radius + 1);
      const std::size_t c1 = std::min(nc, c + radius + 1);
      const double n = box(cnt, r0, c0, r1, c1);
      const double length = (box(straight, r0, c0, r1, c1) + box(diag, r0, c0, r1, c1) * kSqrt2) * flow.cell_m;
      out(r, c) = length / (n * cell_area);
    }
  }
  return out;
}

namespace {
// Felzenszwalb-Huttenlocher lower envelope of parabolas; exact squared EDT in 1-D.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;  // z[0] is -inf, so this never underflows
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}
}  // namespace

Raster distance_from_stream(const Raster& streams, const TerrainConfig& cfg) {
  const std::size_t nr = streams.nrows();
  const std::size_t nc = streams.ncols();
  std::vector<double> sq(streams.size(), kInf);
  bool any = false;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (is_stream(streams, i)) {
      sq[i] = 0.0;
      any = true;
    }
  }
  if (!any) throw DataError("distance_from_stream: mask has no stream cells");
  const std::size_t n = std::max(nr, nc);
  std::vector<double> f, d;
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  f.resize(nr);
  d.resize(nr);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t r = 0; r < nr; ++r) f[r] = sq[r * nc + c];
    edt_1d(f, d, v, z);
    for (std::size_t r = 0; r < nr; ++r) sq[r * nc + c] = d[r];
  }
  f.resize(nc);
  d.resize(nc);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) f[c] = sq[r * nc + c];
    edt_1d(f, d, v, z);
    for (std::size_t c = 0; c < nc; ++c) sq[r * nc + c] = d[c];
  }
  const double cell_m = cfg.cell_m(streams);
  Raster out(output_spec(streams.spec()), -9999.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (streams.valid(i)) out[i] = std::sqrt(sq[i]) * cell_m;
  }
  return out;
}

Raster normalized_difference(const Raster& a, const Raster& b) {
  if (!a.spec().same_grid(b.spec())) throw SchemaError("band rasters are not co-registered");
  Raster out(output_spec(a.spec()), -9999.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.valid(i) || !b.valid(i)) continue;
    const double den = a[i] + b[i];
    if (den == 0.0) continue;
    out[i] = (a[i] - b[i]) / den;
  }
  return out;
}

std::vector<GeoPoint> make_fishnet(const BoundingBox& extent, double cell_m) {
  if (!(cell_m > 0.0)) throw ConfigError("fishnet cell size must be positive");
  if (extent.max_lat < extent.min_lat || extent.max_lon < extent.min_lon) {
    throw ConfigError("fishnet extent is empty");
  }
  const double w = extent.width_m();
  const double h = extent.height_m();
  auto count = [&](double len) -> std::size_t {
    if (len <= 0.0) return 1;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(len / cell_m - 1e-9)));
  };
  const std::size_t nx = count(w);
  const std::size_t ny = count(h);
  const double dlon = cell_m / extent.meters_per_degree_lon();
  const double dlat = cell_m / kMetersPerDegree;
  std::vector<GeoPoint> pts;
  pts.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    const double lat = h > 0.0 ? extent.min_lat + (static_cast<double>(j) + 0.5) * dlat : extent.min_lat;
    for (std::size_t i = 0; i < nx; ++i) {
      const double lon = w > 0.0 ? extent.min_lon + (static_cast<double>(i) + 0.5) * dlon : extent.min_lon;
      pts.push_back({lat, lon});
    }
  }
  return pts;
}

std::vector<HgfVector> sample_hgf(const RasterSet& rasters, std::span<const GeoPoint> points) {
  std::array<const Raster*, kHgfCount> layers{};
  for (std::size_t k = 0; k < kHgfCount; ++k) {
    auto it = rasters.find(kHgfNames[k]);
    if (it == rasters.end()) throw SchemaError("missing HGF raster '" + std::string(kHgfNames[k]) + "'");
    layers[k] = &it->second;
  }
  std::vector<HgfVector> out(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t k = 0; k < kHgfCount; ++k) {
      const Raster& r = *layers[k];
      auto cell = r.cell_of(points[p].lon, points[p].lat);
      if (!cell) {
        throw OutOfBoundsError("point " + std::to_string(p) + " (" + format_double(points[p].lat) + ", " +
                               format_double(points[p].lon) + ") is outside the '" + std::string(kHgfNames[k]) +
                               "' raster extent");
      }
      const double v = r(cell->first, cell->second);
      if (r.is_nodata_value(v)) {
        throw DataError("point " + std::to_string(p) + " samples nodata in '" + std::string(kHgfNames[k]) + "'");
      }
      out[p].values[k] = v;
    }
  }
  return out;
}

RasterSet derive_features(const TerrainInputs& in, const TerrainConfig& cfg) {
  const GridSpec& ref = in.dem.spec();
  for (const Raster* r : {&in.nir, &in.red, &in.swir, &in.sy, &in.clay_thickness, &in.lithology}) {
    if (!r->spec().same_grid(ref)) throw SchemaError("input rasters are not co-registered with the DEM");
  }
  const Raster filled = fill_pits(in.dem);
  const FlowField flow = flow_accumulation(filled, cfg);
  const SlopeField slope = slope_percent(in.dem, cfg);
  CurvatureField curv = curvature(in.dem, cfg);
  const Raster streams = stream_mask(flow, cfg.stream_threshold);

  RasterSet out;
  out.emplace("slope", slope.percent);
  out.emplace("drainage_density", drainage_density_raster(streams, flow, cfg.dd_radius_cells));
  out.emplace("elevation", in.dem);
  out.emplace("dist_stream", distance_from_stream(streams, cfg));
  out.emplace("twi", twi(flow, slope, cfg));
  out.emplace("tri", tri(in.dem, cfg));
  out.emplace("sti", sti(flow, slope));
  out.emplace("spi", spi(flow, slope));
  out.emplace("curvature", std::move(curv.total));
  out.emplace("plan_curvature", std::move(curv.plan));
  out.emplace("profile_curvature", std::move(curv.profile));
  out.emplace("aspect", aspect(slope));
  out.emplace("sy", in.sy);
  out.emplace("lithology_clay_thickness", in.clay_thickness);
  out.emplace("lithology", in.lithology);
  out.emplace("ndvi", ndvi(in.nir, in.red));
  out.emplace("ndwi", ndwi(in.nir, in.swir));
  return out;
}

}  // namespace aqd::terrain
