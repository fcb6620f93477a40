#pragma once

// Core spatial types and file formats: ESRI ASCII grids, the wells and
// GLDAS-grid CSV schemas, HGF point tables and GeoJSON point layers.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace aqd {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kPi = 3.14159265358979323846;
/// Arc length of one degree of latitude on the fixed-radius sphere.
inline constexpr double kMetersPerDegree = kEarthRadiusM * kPi / 180.0;

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
/// Strict full-string parse; nullopt on any trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool valid() const noexcept { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Index of the candidate nearest to `q`; ties go to the lowest index.
/// Throws DataError when `candidates` is empty.
std::size_t nearest_index(std::span<const GeoPoint> candidates, const GeoPoint& q);

/// Lat/lon box. Metric width is measured along the mid-latitude parallel.
struct BoundingBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  double mid_lat() const noexcept { return 0.5 * (min_lat + max_lat); }
  double meters_per_degree_lon() const noexcept;
  double width_m() const noexcept;
  double height_m() const noexcept;
  bool contains(const GeoPoint& p) const noexcept;

  /// Box with its south-west corner at (lat, lon) spanning the given metric size.
  static BoundingBox from_origin(double lat, double lon, double width_m, double height_m);
};

// ---------------------------------------------------------------------------
// Raster

struct GridSpec {
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  double xll = 0.0;
  double yll = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;

  std::size_t size() const noexcept { return ncols * nrows; }
  bool same_grid(const GridSpec& o) const noexcept {
    return ncols == o.ncols && nrows == o.nrows && xll == o.xll && yll == o.yll && cellsize == o.cellsize;
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Row-major grid, row 0 is the northern edge.
class Raster {
 public:
  Raster() = default;
  Raster(GridSpec spec, std::vector<double> values);
  Raster(GridSpec spec, double fill);

  const GridSpec& spec() const noexcept { return spec_; }
  std::size_t ncols() const noexcept { return spec_.ncols; }
  std::size_t nrows() const noexcept { return spec_.nrows; }
  std::size_t size() const noexcept { return values_.size(); }
  double cellsize() const noexcept { return spec_.cellsize; }
  double nodata() const noexcept { return spec_.nodata; }

  double operator()(std::size_t row, std::size_t col) const noexcept { return values_[row * spec_.ncols + col]; }
  double& operator()(std::size_t row, std::size_t col) noexcept { return values_[row * spec_.ncols + col]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  bool is_nodata_value(double v) const noexcept { return v != v || v == spec_.nodata; }
  bool valid(std::size_t row, std::size_t col) const noexcept { return !is_nodata_value((*this)(row, col)); }
  bool valid(std::size_t i) const noexcept { return !is_nodata_value(values_[i]); }
  std::size_t count_valid() const noexcept;

  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }

  /// Map-unit coordinates of a cell center.
  std::pair<double, double> center(std::size_t row, std::size_t col) const noexcept;
  /// Cell containing map point (x, y); nullopt outside the extent.
  std::optional<std::pair<std::size_t, std::size_t>> cell_of(double x, double y) const noexcept;

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

Raster read_ascii_grid(const std::filesystem::path& path);
Raster parse_ascii_grid(std::istream& in);
void write_ascii_grid(const Raster& raster, const std::filesystem::path& path);
void write_ascii_grid(const Raster& raster, std::ostream& out);

// ---------------------------------------------------------------------------
// Hydro-geological factors

enum class Hgf : std::size_t {
  slope,
  drainage_density,
  elevation,
  dist_stream,
  twi,
  tri,
  sti,
  spi,
  curvature,
  plan_curvature,
  profile_curvature,
  aspect,
  sy,
  lithology_clay_thickness,
  lithology,
  ndvi,
  ndwi,
};

inline constexpr std::size_t kHgfCount = 17;

inline constexpr std::array<std::string_view, kHgfCount> kHgfNames{
    "slope", "drainage_density", "elevation", "dist_stream", "twi", "tri",
    "sti", "spi", "curvature", "plan_curvature", "profile_curvature", "aspect",
    "sy", "lithology_clay_thickness", "lithology", "ndvi", "ndwi"};

struct HgfVector {
  std::array<double, kHgfCount> values{};

  double operator[](Hgf f) const noexcept { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Hgf f) noexcept { return values[static_cast<std::size_t>(f)]; }
  int lithology_code() const noexcept;
  /// Throws DomainError when sy, ndvi or ndwi leave their ranges.
  void validate() const;

  friend bool operator==(const HgfVector&, const HgfVector&) = default;
};

// ---------------------------------------------------------------------------
// Observations

struct WellObservation {
  std::string station_id;
  GeoPoint location;
  int year = 0;
  std::optional<double> max_gwl;  // m BGL
  std::optional<double> min_gwl;  // m BGL
};

struct WellsSummary {
  std::size_t both = 0;
  std::size_t max_only = 0;
  std::size_t min_only = 0;
  std::size_t rejected = 0;
  std::size_t input_rows = 0;
};

struct WellsTable {
  std::vector<WellObservation> observations;
  WellsSummary summary;
  std::vector<std::size_t> rejected_rows;  // 1-based data-row indices
};

struct YearRange {
  int first = 0;
  int last = 0;
  bool contains(int y) const noexcept { return y >= first && y <= last; }
};

/// Header `station_id,lat,lon,year,max_gwl_m,min_gwl_m`; empty field = absent.
WellsTable read_wells_csv(const std::filesystem::path& path, std::optional<YearRange> years = std::nullopt);
WellsTable parse_wells_csv(std::istream& in, std::optional<YearRange> years = std::nullopt);
void write_wells_csv(std::span<const WellObservation> wells, const std::filesystem::path& path);

struct GldasCell {
  int serial_id = 0;
  GeoPoint centroid;
  int year = 0;
  double max_gws = 0.0;  // mm
  double min_gws = 0.0;  // mm
  std::optional<HgfVector> rep_hgf;
};

/// Header `serial_id,lat,lon,year,max_gws_mm,min_gws_mm`.
std::vector<GldasCell> read_gldas_csv(const std::filesystem::path& path);
std::vector<GldasCell> parse_gldas_csv(std::istream& in);
void write_gldas_csv(std::span<const GldasCell> cells, const std::filesystem::path& path);

/// Point table `point_id,lat,lon,<17 HGF columns>`.
struct HgfTable {
  std::vector<std::string> ids;
  std::vector<GeoPoint> points;
  std::vector<HgfVector> hgf;
};

HgfTable read_hgf_csv(const std::filesystem::path& path);
void write_hgf_csv(const HgfTable& table, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// GeoJSON

using PropertyValue = std::variant<double, std::int64_t, std::string>;
using PropertyMap = std::vector<std::pair<std::string, PropertyValue>>;

struct PointFeature {
  GeoPoint point;
  PropertyMap properties;
};

/// RFC 7946 FeatureCollection of Point features ([lon, lat] order).
std::string to_geojson(std::span<const PointFeature> features);
void write_geojson(std::span<const PointFeature> features, const std::filesystem::path& path);

/// Write `text` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// Comma split with surrounding whitespace (and a trailing CR) trimmed per field.
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace aqd
