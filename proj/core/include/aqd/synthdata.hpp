#pragma once

// Seeded synthetic world with known ground truth: rasters, stations, coarse
// storage cells and the closed-form water-level fields that generated them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "aqd/geodata.hpp"
#include "aqd/terrain.hpp"

namespace aqd::synth {

struct WorldConfig {
  std::uint64_t seed = 42;
  double origin_lat = 23.0;  // south-west corner
  double origin_lon = 89.0;
  double width_m = 200'000.0;
  double height_m = 100'000.0;
  double dem_cell_m = 500.0;
  double fishnet_cell_m = 2'000.0;
  double gldas_cell_m = 20'000.0;
  std::vector<int> years{2001, 2002, 2003, 2004, 2005, 2006, 2007, 2008, 2009, 2010};
  std::size_t n_stations = 400;
  double station_min_fraction = 0.45;  // stations that report a min level at all
  double station_year_coverage = 0.9;  // chance a station reports in a given year
  double noise_sd = 0.3;               // m, station measurement noise
  double trend = 0.15;                 // m/year deepening of every level
  std::optional<int> shift_year;       // year with an extra spatial anomaly
  double shift_m = 2.0;                // anomaly amplitude
  terrain::TerrainConfig terrain = default_terrain();

  static terrain::TerrainConfig default_terrain() {
    terrain::TerrainConfig t;
    t.meters_per_map_unit = kMetersPerDegree;
    return t;
  }

  BoundingBox extent() const { return BoundingBox::from_origin(origin_lat, origin_lon, width_m, height_m); }
  /// Throws ConfigError on a non-integer gldas/fishnet ratio, fewer than 3
  /// years, more stations than fishnet points, or out-of-range fractions.
  void validate() const;
};

struct TrueLevels {
  double max_gwl = 0.0;
  double min_gwl = 0.0;
};

/// The generative function: deterministic levels from a point's HGFs.
/// `anomaly` is added to both levels (zero outside the shift year).
TrueLevels true_levels(const HgfVector& hgf, int year, const WorldConfig& cfg, double anomaly = 0.0);

struct World {
  WorldConfig cfg;
  BoundingBox extent;
  terrain::TerrainInputs inputs;
  terrain::RasterSet features;
  std::vector<GeoPoint> fishnet;
  std::vector<HgfVector> fishnet_hgf;
  std::vector<int> fishnet_serial;              // GLDAS serial of each fishnet point
  std::vector<GldasCell> cells;                 // ordered by (year, serial_id)
  std::vector<WellObservation> stations;        // ordered by (station, year)
  std::vector<std::size_t> station_fishnet_index;  // per distinct station, in id order
  std::map<int, std::vector<TrueLevels>> truth;  // per year, aligned with fishnet
};

World generate_world(const WorldConfig& cfg);

/// Exact generative levels for `year`; throws CoverageError on an unknown year.
const std::vector<TrueLevels>& true_field(const World& world, int year);

struct BundlePaths {
  std::filesystem::path dem, nir, red, swir, sy, clay, lithology;
  std::filesystem::path wells, gldas;
  std::filesystem::path truth;  // optional; empty = skip
};

/// Writes the world as ordinary input files (ASCII grids and CSVs).
void write_bundle(const World& world, const BundlePaths& paths);

}  // namespace aqd::synth
