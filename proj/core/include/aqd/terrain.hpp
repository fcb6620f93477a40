#pragma once

// DEM-derived hydro-geological factor rasters: pit filling, D8 routing,
// slope/aspect, wetness and stream indices, curvature, drainage density,
// stream distance and normalized-difference band indices.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aqd/geodata.hpp"

namespace aqd::terrain {

enum class TwiVariant { literal, tangent };
enum class TriVariant { literal, riley };

struct TerrainConfig {
  /// Accumulated cell count at or above which a cell is part of the stream network.
  double stream_threshold = 100.0;
  double beta_min_deg = 0.1;
  /// literal: ln(A_s / beta_degrees); tangent: ln(A_s / tan(beta)).
  TwiVariant twi = TwiVariant::literal;
  /// literal: sqrt(max^2 - min^2) on the 3x3 window of the min-shifted DEM;
  /// riley: sqrt(sum (z_i - z_c)^2).
  TriVariant tri = TriVariant::literal;
  /// Ground length of one map unit (1 for projected meters, kMetersPerDegree for lat/lon grids).
  double meters_per_map_unit = 1.0;
  /// Half-width in cells of the moving window used for the drainage-density raster.
  std::size_t dd_radius_cells = 5;

  double cell_m(const Raster& r) const noexcept { return r.cellsize() * meters_per_map_unit; }
};

/// D8 codes in tie-break order: N, NE, E, SE, S, SW, W, NW.
inline constexpr std::int8_t kOutlet = -1;
inline constexpr std::int8_t kNoData = -2;
inline constexpr int kDRow[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
inline constexpr int kDCol[8] = {0, 1, 1, 1, 0, -1, -1, -1};

struct FlowField {
  GridSpec spec;
  double cell_m = 1.0;
  std::vector<std::int8_t> directions;
  /// Contributing cell count including the cell itself; nodata where the DEM is nodata.
  Raster accumulation;

  /// Index of the downstream cell, nullopt for outlets and nodata.
  std::optional<std::size_t> downstream(std::size_t i) const noexcept;
  /// Specific catchment area A_s = accumulation * cell_m^2 / cell_m.
  double specific_area(std::size_t i) const noexcept { return accumulation[i] * cell_m; }
};

struct SlopeField {
  double cell_m = 1.0;
  Raster percent;
  Raster radians;
  /// Elevation change per cell eastward / northward.
  Raster gx;
  Raster gy;
};

struct CurvatureField {
  Raster total;
  Raster plan;
  Raster profile;
  /// 1 where the 3x3 fit had to extrapolate missing neighbors.
  std::vector<std::uint8_t> one_sided;
  std::size_t one_sided_count = 0;
};

Raster fill_pits(const Raster& dem);
FlowField flow_accumulation(const Raster& filled_dem, const TerrainConfig& cfg = {});
SlopeField slope_percent(const Raster& dem, const TerrainConfig& cfg = {});
Raster aspect(const SlopeField& slope);
CurvatureField curvature(const Raster& dem, const TerrainConfig& cfg = {});
Raster tri(const Raster& dem, const TerrainConfig& cfg = {});

double twi_value(double specific_area, double beta_rad, const TerrainConfig& cfg = {});
double sti_value(double specific_area, double beta_rad);
double spi_value(double specific_area, double beta_rad);
double tri_value(double window_max, double window_min);

Raster twi(const FlowField& flow, const SlopeField& slope, const TerrainConfig& cfg = {});
Raster sti(const FlowField& flow, const SlopeField& slope);
Raster spi(const FlowField& flow, const SlopeField& slope);

Raster stream_mask(const FlowField& flow, double threshold);
/// Stream length inside `zone` divided by zone area (1/m). Diagonal links count cell*sqrt(2).
double drainage_density(const Raster& streams, const FlowField& flow, std::span<const std::size_t> zone);
/// drainage_density over a (2r+1)^2 moving window around every cell.
Raster drainage_density_raster(const Raster& streams, const FlowField& flow, std::size_t radius_cells);
/// Exact Euclidean distance (m) from every cell center to the nearest stream cell center.
Raster distance_from_stream(const Raster& streams, const TerrainConfig& cfg = {});

Raster normalized_difference(const Raster& a, const Raster& b);
inline Raster ndvi(const Raster& nir, const Raster& red) { return normalized_difference(nir, red); }
inline Raster ndwi(const Raster& nir, const Raster& swir) { return normalized_difference(nir, swir); }

/// Cell-center points at `cell_m` spacing covering `extent`.
std::vector<GeoPoint> make_fishnet(const BoundingBox& extent, double cell_m);

using RasterSet = std::map<std::string, Raster, std::less<>>;

/// Nearest-cell sampling of every HGF raster (keyed by kHgfNames) at each point.
std::vector<HgfVector> sample_hgf(const RasterSet& rasters, std::span<const GeoPoint> points);

struct TerrainInputs {
  Raster dem;
  Raster nir;
  Raster red;
  Raster swir;
  Raster sy;
  Raster clay_thickness;
  Raster lithology;
};

/// Every HGF raster derived from co-registered inputs, keyed by kHgfNames.
RasterSet derive_features(const TerrainInputs& in, const TerrainConfig& cfg = {});

}  // namespace aqd::terrain
