#include "aqd/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "aqd/errors.hpp"
#include "aqd/random.hpp"

namespace aqd::synth {

namespace {

// Layered value noise on a seeded integer lattice, result in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, double wavelength_m, int octaves = 4)
      : seed_(seed), wavelength_(wavelength_m), octaves_(octaves) {}

  double operator()(double x_m, double y_m) const {
    double sum = 0.0, norm = 0.0, amp = 1.0, lambda = wavelength_;
    for (int o = 0; o < octaves_; ++o) {
      sum += amp * layer(x_m / lambda, y_m / lambda, o);
      norm += amp;
      amp *= 0.5;
      lambda *= 0.5;
    }
    return sum / norm;
  }

  double unit(double x_m, double y_m) const { return 0.5 + 0.5 * (*this)(x_m, y_m); }
  /// Layered noise piles up near zero; this spreads it back over [0, 1].
  double stretched(double x_m, double y_m) const { return std::clamp(0.5 + 1.5 * (*this)(x_m, y_m), 0.0, 1.0); }

 private:
  double lattice(std::int64_t ix, std::int64_t iy, int octave) const {
    std::uint64_t h = derive_seed(seed_, static_cast<std::uint64_t>(octave));
    h = splitmix64(h ^ static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4FULL);
    return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
  }

  static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

  double layer(double x, double y, int octave) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double u = fade(x - fx), v = fade(y - fy);
    const double a = lattice(ix, iy, octave), b = lattice(ix + 1, iy, octave);
    const double c = lattice(ix, iy + 1, octave), d = lattice(ix + 1, iy + 1, octave);
    const double top = a + (b - a) * u;
    const double bottom = c + (d - c) * u;
    return top + (bottom - top) * v;
  }

  std::uint64_t seed_;
  double wavelength_;
  int octaves_;
};

// Independent sub-streams of the master seed.
enum Stream : std::uint64_t {
  kDem = 1,
  kRed,
  kNdvi,
  kNdwi,
  kSy,
  kClay,
  kLith,
  kStations,
  kGws,
  kShift,
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

constexpr std::array<double, 4> kLithOffset{0.0, 0.8, -0.5, 1.2};

}  // namespace

void WorldConfig::validate() const {
  if (!(fishnet_cell_m > 0.0) || !(gldas_cell_m > 0.0) || !(dem_cell_m > 0.0)) {
    throw ConfigError("cell sizes must be positive");
  }
  const double ratio = gldas_cell_m / fishnet_cell_m;
  if (ratio < 1.0 || std::fabs(ratio - std::round(ratio)) > 1e-9) {
    throw ConfigError("gldas_cell (" + format_double(gldas_cell_m) + " m) is not an integer multiple of fishnet_cell (" +
                      format_double(fishnet_cell_m) + " m)");
  }
  if (!(width_m > 0.0) || !(height_m > 0.0)) throw ConfigError("world extent must be nonempty");
  std::set<int> distinct(years.begin(), years.end());
  if (distinct.size() < 3 || distinct.size() != years.size()) throw ConfigError("world needs at least 3 distinct years");
  if (!std::is_sorted(years.begin(), years.end())) throw ConfigError("world years must be increasing");
  if (shift_year && !distinct.contains(*shift_year)) throw ConfigError("shift_year is not one of the years");
  const double nx = std::ceil(width_m / fishnet_cell_m - 1e-9);
  const double ny = std::ceil(height_m / fishnet_cell_m - 1e-9);
  if (static_cast<double>(n_stations) > nx * ny) throw ConfigError("more stations than fishnet points");
  if (!(station_min_fraction >= 0.0 && station_min_fraction <= 1.0) ||
      !(station_year_coverage > 0.0 && station_year_coverage <= 1.0)) {
    throw ConfigError("station fractions must lie in [0, 1]");
  }
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be nonnegative");
}

TrueLevels true_levels(const HgfVector& h, int year, const WorldConfig& cfg, double anomaly) {
  const double elev = h[Hgf::elevation];
  const double clay = h[Hgf::lithology_clay_thickness];
  const double sy = h[Hgf::sy];
  const double twi = h[Hgf::twi];
  const double dist = h[Hgf::dist_stream];
  const double ndvi = h[Hgf::ndvi];
  const int lith = std::clamp(h.lithology_code(), 1, 4);
  const double dy = static_cast<double>(year - cfg.years.front());

  // Deeper water under high ground and thick clay, shallower in wet lowlands.
  const double base = 2.0 + 0.15 * elev + 0.05 * clay + kLithOffset[static_cast<std::size_t>(lith - 1)] -
                      0.35 * std::tanh((twi - 11.0) / 2.0) + 0.4 * std::log1p(dist / 1000.0);
  TrueLevels out;
  out.max_gwl = base + cfg.trend * dy + anomaly;

  // Seasonal swing grows with specific yield and shrinks under clay; it
  // drifts over the years at a rate set by vegetation cover.
  const double u = clamp01(0.65 * (sy - 0.03) / 0.22 + 0.35 * (1.0 - clay / 30.0));
  const double swing = 0.1 + 4.3 * u * u;
  const double drift = -0.03 + 0.045 * clamp01((ndvi - 0.1) / 0.7);
  out.min_gwl = out.max_gwl - swing * (1.0 + drift * dy);
  return out;
}

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World w;
  w.cfg = cfg;
  w.extent = cfg.extent();

  // Input rasters on a lat/lon grid padded by one fishnet cell.
  const double cell_deg = cfg.dem_cell_m / kMetersPerDegree;
  const double pad_lat = cfg.fishnet_cell_m / kMetersPerDegree;
  const double pad_lon = cfg.fishnet_cell_m / w.extent.meters_per_degree_lon();
  GridSpec spec;
  spec.xll = w.extent.min_lon - pad_lon;
  spec.yll = w.extent.min_lat - pad_lat;
  spec.cellsize = cell_deg;
  spec.ncols = static_cast<std::size_t>(std::ceil((w.extent.max_lon + pad_lon - spec.xll) / cell_deg));
  spec.nrows = static_cast<std::size_t>(std::ceil((w.extent.max_lat + pad_lat - spec.yll) / cell_deg));

  const double mpd_lon = w.extent.meters_per_degree_lon();
  const ValueNoise dem_noise(derive_seed(cfg.seed, kDem), 60'000.0);
  const ValueNoise red_noise(derive_seed(cfg.seed, kRed), 30'000.0);
  const ValueNoise ndvi_noise(derive_seed(cfg.seed, kNdvi), 40'000.0);
  const ValueNoise ndwi_noise(derive_seed(cfg.seed, kNdwi), 40'000.0);
  const ValueNoise sy_noise(derive_seed(cfg.seed, kSy), 50'000.0);
  const ValueNoise clay_noise(derive_seed(cfg.seed, kClay), 40'000.0);
  const ValueNoise lith_noise(derive_seed(cfg.seed, kLith), 70'000.0, 2);

  Raster dem(spec, 0.0), nir(spec, 0.0), red(spec, 0.0), swir(spec, 0.0), sy(spec, 0.0), clay(spec, 0.0),
      lith(spec, 0.0);
  for (std::size_t r = 0; r < spec.nrows; ++r) {
    for (std::size_t c = 0; c < spec.ncols; ++c) {
      const auto [lon, lat] = dem.center(r, c);
      const double x = (lon - cfg.origin_lon) * mpd_lon;
      const double y = (lat - cfg.origin_lat) * kMetersPerDegree;
      dem(r, c) = 5.0 + 0.3 * (y / 1000.0) + 35.0 * dem_noise.unit(x, y);

      const double rv = 0.08 + 0.04 * red_noise.unit(x, y);
      const double v = 0.1 + 0.7 * ndvi_noise.stretched(x, y);
      const double wv = -0.3 + 0.6 * ndwi_noise.stretched(x, y);
      red(r, c) = rv;
      nir(r, c) = rv * (1.0 + v) / (1.0 - v);
      swir(r, c) = nir(r, c) * (1.0 - wv) / (1.0 + wv);

      sy(r, c) = 0.03 + 0.22 * sy_noise.stretched(x, y);
      clay(r, c) = 30.0 * clay_noise.stretched(x, y);
      const double l = lith_noise.stretched(x, y);
      lith(r, c) = l < 0.3 ? 1.0 : l < 0.5 ? 2.0 : l < 0.7 ? 3.0 : 4.0;
    }
  }
  w.inputs = terrain::TerrainInputs{std::move(dem), std::move(nir), std::move(red), std::move(swir),
                                    std::move(sy),  std::move(clay), std::move(lith)};
  w.features = terrain::derive_features(w.inputs, cfg.terrain);

  w.fishnet = terrain::make_fishnet(w.extent, cfg.fishnet_cell_m);
  w.fishnet_hgf = terrain::sample_hgf(w.features, w.fishnet);

  // Coarse cells tile the extent; each fishnet point joins its nearest centroid.
  const auto centroids = terrain::make_fishnet(w.extent, cfg.gldas_cell_m);
  w.fishnet_serial.resize(w.fishnet.size());
  for (std::size_t i = 0; i < w.fishnet.size(); ++i) {
    w.fishnet_serial[i] = static_cast<int>(nearest_index(centroids, w.fishnet[i])) + 1;
  }

  const ValueNoise shift_noise(derive_seed(cfg.seed, kShift), 50'000.0, 2);
  for (int year : cfg.years) {
    auto& field = w.truth[year];
    field.resize(w.fishnet.size());
    for (std::size_t i = 0; i < w.fishnet.size(); ++i) {
      double anomaly = 0.0;
      if (cfg.shift_year && *cfg.shift_year == year) {
        const double x = (w.fishnet[i].lon - cfg.origin_lon) * mpd_lon;
        const double y = (w.fishnet[i].lat - cfg.origin_lat) * kMetersPerDegree;
        anomaly = cfg.shift_m * shift_noise(x, y);
      }
      field[i] = true_levels(w.fishnet_hgf[i], year, cfg, anomaly);
    }
  }

  // Storage falls as the cell's mean level deepens: a seeded, strictly
  // decreasing warp plus a per-year offset shared by all cells.
  Rng gws_rng(derive_seed(cfg.seed, kGws));
  const double a = 600.0, b = 35.0, s = 2.0;
  const double c = gws_rng.uniform(0.0, 0.4 * b * s);
  double m0 = 0.0;
  for (const auto& t : w.truth.begin()->second) m0 += t.max_gwl;
  m0 /= static_cast<double>(w.fishnet.size());
  auto warp = [&](double m) { return a - b * m - c * std::tanh((m - m0) / s); };
  const std::size_t n_cells = centroids.size();
  for (int year : cfg.years) {
    const double offset = 3.0 * gws_rng.normal();
    std::vector<double> sum_max(n_cells, 0.0), sum_min(n_cells, 0.0);
    std::vector<std::size_t> count(n_cells, 0);
    const auto& field = w.truth.at(year);
    for (std::size_t i = 0; i < w.fishnet.size(); ++i) {
      const auto k = static_cast<std::size_t>(w.fishnet_serial[i] - 1);
      sum_max[k] += field[i].max_gwl;
      sum_min[k] += field[i].min_gwl;
      ++count[k];
    }
    for (std::size_t k = 0; k < n_cells; ++k) {
      if (count[k] == 0) continue;
      GldasCell cell;
      cell.serial_id = static_cast<int>(k) + 1;
      cell.centroid = centroids[k];
      cell.year = year;
      // Deepest mean level gives the least storage.
      cell.min_gws = warp(sum_max[k] / static_cast<double>(count[k])) + offset;
      cell.max_gws = warp(sum_min[k] / static_cast<double>(count[k])) + offset;
      w.cells.push_back(cell);
    }
  }

  // Stations: a fishnet subsample reporting noisy truth.
  Rng st_rng(derive_seed(cfg.seed, kStations));
  std::vector<std::size_t> idx(w.fishnet.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  st_rng.shuffle(idx);
  idx.resize(cfg.n_stations);
  std::sort(idx.begin(), idx.end());
  w.station_fishnet_index = idx;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::string id = std::to_string(k + 1);
    id = "ST" + std::string(id.size() < 4 ? 4 - id.size() : 0, '0') + id;
    const bool reports_min = st_rng.bernoulli(cfg.station_min_fraction);
    for (int year : cfg.years) {
      const bool present = st_rng.bernoulli(cfg.station_year_coverage);
      const double e_max = st_rng.normal() * cfg.noise_sd;
      const double e_min = st_rng.normal() * cfg.noise_sd;
      if (!present) continue;
      const auto& t = w.truth.at(year)[idx[k]];
      WellObservation obs;
      obs.station_id = id;
      obs.location = w.fishnet[idx[k]];
      obs.year = year;
      obs.max_gwl = t.max_gwl + e_max;
      if (reports_min) obs.min_gwl = t.min_gwl + e_min;
      w.stations.push_back(std::move(obs));
    }
  }
  return w;
}

const std::vector<TrueLevels>& true_field(const World& world, int year) {
  auto it = world.truth.find(year);
  if (it == world.truth.end()) throw CoverageError("year " + std::to_string(year) + " is not in the synthetic world");
  return it->second;
}

void write_bundle(const World& world, const BundlePaths& paths) {
  write_ascii_grid(world.inputs.dem, paths.dem);
  write_ascii_grid(world.inputs.nir, paths.nir);
  write_ascii_grid(world.inputs.red, paths.red);
  write_ascii_grid(world.inputs.swir, paths.swir);
  write_ascii_grid(world.inputs.sy, paths.sy);
  write_ascii_grid(world.inputs.clay_thickness, paths.clay);
  write_ascii_grid(world.inputs.lithology, paths.lithology);
  write_wells_csv(world.stations, paths.wells);
  write_gldas_csv(world.cells, paths.gldas);
  if (!paths.truth.empty()) {
    std::ostringstream out;
    out << "lat,lon,year,max_gwl_m,min_gwl_m\n";
    for (const auto& [year, field] : world.truth) {
      for (std::size_t i = 0; i < field.size(); ++i) {
        out << format_double(world.fishnet[i].lat) << ',' << format_double(world.fishnet[i].lon) << ',' << year << ','
            << format_double(field[i].max_gwl) << ',' << format_double(field[i].min_gwl) << '\n';
      }
    }
    write_text_file(paths.truth, out.str());
  }
}

}  // namespace aqd::synth
