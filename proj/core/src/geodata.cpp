#include "aqd/geodata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aqd/errors.hpp"

namespace aqd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string(), "cannot open for reading");
  }
  return in;
}

bool is_identifier(std::string_view key) {
  if (key.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(key.front())) return false;
  return std::all_of(key.begin(), key.end(), [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

void expect_header(std::istream& in, std::string_view expected, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError(std::string(what) + ": missing header", 1);
  }
  if (trim(line) != expected) {
    throw FormatError(std::string(what) + ": expected header '" + std::string(expected) + "'", 1);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  constexpr double rad = kPi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double s1 = std::sin(0.5 * dlat);
  const double s2 = std::sin(0.5 * dlon);
  double h = s1 * s1 + std::cos(a.lat * rad) * std::cos(b.lat * rad) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

std::size_t nearest_index(std::span<const GeoPoint> candidates, const GeoPoint& q) {
  if (candidates.empty()) throw DataError("no candidate points");
  std::size_t best = 0;
  double best_d = haversine_m(candidates[0], q);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double d = haversine_m(candidates[i], q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double BoundingBox::meters_per_degree_lon() const noexcept {
  return kMetersPerDegree * std::cos(mid_lat() * kPi / 180.0);
}

double BoundingBox::width_m() const noexcept { return (max_lon - min_lon) * meters_per_degree_lon(); }

double BoundingBox::height_m() const noexcept { return (max_lat - min_lat) * kMetersPerDegree; }

bool BoundingBox::contains(const GeoPoint& p) const noexcept {
  return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
}

BoundingBox BoundingBox::from_origin(double lat, double lon, double width_m, double height_m) {
  if (width_m < 0.0 || height_m < 0.0) {
    throw ConfigError("bounding box size must be nonnegative");
  }
  BoundingBox box{lat, lon, lat + height_m / kMetersPerDegree, lon};
  box.max_lon = lon + width_m / box.meters_per_degree_lon();
  return box;
}

// ---------------------------------------------------------------------------

Raster::Raster(GridSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
  if (!(spec_.cellsize > 0.0)) {
    throw DataError("raster cellsize must be positive");
  }
  if (values_.size() != spec_.size()) {
    throw DataError("raster value count " + std::to_string(values_.size()) + " does not match " +
                    std::to_string(spec_.ncols) + "x" + std::to_string(spec_.nrows));
  }
}

Raster::Raster(GridSpec spec, double fill) : Raster(spec, std::vector<double>(spec.size(), fill)) {}

std::size_t Raster::count_valid() const noexcept {
  std::size_t n = 0;
  for (double v : values_) n += is_nodata_value(v) ? 0 : 1;
  return n;
}

std::pair<double, double> Raster::center(std::size_t row, std::size_t col) const noexcept {
  const double x = spec_.xll + (static_cast<double>(col) + 0.5) * spec_.cellsize;
  const double y = spec_.yll + (static_cast<double>(spec_.nrows - row) - 0.5) * spec_.cellsize;
  return {x, y};
}

std::optional<std::pair<std::size_t, std::size_t>> Raster::cell_of(double x, double y) const noexcept {
  const double fx = (x - spec_.xll) / spec_.cellsize;
  const double fy = (y - spec_.yll) / spec_.cellsize;
  if (!(fx >= 0.0) || !(fy >= 0.0)) return std::nullopt;
  const double ncols = static_cast<double>(spec_.ncols);
  const double nrows = static_cast<double>(spec_.nrows);
  if (fx > ncols || fy > nrows) return std::nullopt;
  // The far edges belong to the last column / first row.
  const auto col = static_cast<std::size_t>(std::min(std::floor(fx), ncols - 1.0));
  const auto row_from_south = static_cast<std::size_t>(std::min(std::floor(fy), nrows - 1.0));
  return std::pair{spec_.nrows - 1 - row_from_south, col};
}

Raster parse_ascii_grid(std::istream& in) {
  static constexpr std::array<std::string_view, 6> kKeys{"ncols", "nrows", "xllcorner",
                                                         "yllcorner", "cellsize", "nodata_value"};
  std::array<double, 6> header{};
  std::string line;
  std::size_t lineno = 0;
  for (std::size_t k = 0; k < kKeys.size(); ++k) {
    if (!std::getline(in, line)) {
      throw FormatError("truncated header, expected '" + std::string(kKeys[k]) + "'", lineno + 1);
    }
    ++lineno;
    std::istringstream ls(line);
    std::string key, value, extra;
    ls >> key >> value;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (key != kKeys[k]) {
      throw FormatError("expected header key '" + std::string(kKeys[k]) + "', found '" + key + "'", lineno);
    }
    if (ls >> extra) {
      throw FormatError("unexpected token after header value", lineno);
    }
    auto v = parse_double(value);
    if (!v) {
      throw FormatError("non-numeric header value for '" + key + "'", lineno);
    }
    header[k] = *v;
  }
  const auto whole = [&](double v, std::size_t ln) {
    if (!(v >= 1.0) || v != std::floor(v)) throw FormatError("ncols/nrows must be positive integers", ln);
    return static_cast<std::size_t>(v);
  };
  GridSpec spec;
  spec.ncols = whole(header[0], 1);
  spec.nrows = whole(header[1], 2);
  spec.xll = header[2];
  spec.yll = header[3];
  spec.cellsize = header[4];
  spec.nodata = header[5];
  if (!(spec.cellsize > 0.0)) throw FormatError("cellsize must be positive", 5);

  std::vector<double> values;
  values.reserve(spec.size());
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest = line;
    while (true) {
      rest = trim(rest);
      if (rest.empty()) break;
      auto end = rest.find_first_of(" \t");
      auto tok = rest.substr(0, end);
      auto v = parse_double(tok);
      if (!v) throw FormatError("non-numeric cell value '" + std::string(tok) + "'", lineno);
      if (values.size() == spec.size()) {
        throw FormatError("more values than ncols x nrows = " + std::to_string(spec.size()), lineno);
      }
      values.push_back(*v);
      if (end == std::string_view::npos) break;
      rest.remove_prefix(end);
    }
  }
  if (values.size() != spec.size()) {
    throw FormatError("value count " + std::to_string(values.size()) + " does not match ncols x nrows = " +
                          std::to_string(spec.size()),
                      lineno);
  }
  return Raster(spec, std::move(values));
}

Raster read_ascii_grid(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_ascii_grid(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.line());
  }
}

void write_ascii_grid(const Raster& raster, std::ostream& out) {
  const auto& s = raster.spec();
  out << "ncols " << s.ncols << '\n'
      << "nrows " << s.nrows << '\n'
      << "xllcorner " << format_double(s.xll) << '\n'
      << "yllcorner " << format_double(s.yll) << '\n'
      << "cellsize " << format_double(s.cellsize) << '\n'
      << "NODATA_value " << format_double(s.nodata) << '\n';
  for (std::size_t r = 0; r < s.nrows; ++r) {
    for (std::size_t c = 0; c < s.ncols; ++c) {
      if (c) out << ' ';
      out << format_double(raster(r, c));
    }
    out << '\n';
  }
}

void write_ascii_grid(const Raster& raster, const std::filesystem::path& path) {
  std::ostringstream out;
  write_ascii_grid(raster, out);
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------

int HgfVector::lithology_code() const noexcept {
  return static_cast<int>(std::lround((*this)[Hgf::lithology]));
}

void HgfVector::validate() const {
  const double sy = (*this)[Hgf::sy];
  if (!(sy >= 0.0 && sy <= 1.0)) throw DomainError("sy outside [0,1]: " + format_double(sy));
  for (Hgf f : {Hgf::ndvi, Hgf::ndwi}) {
    const double v = (*this)[f];
    if (!(v >= -1.0 && v <= 1.0)) {
      throw DomainError(std::string(kHgfNames[static_cast<std::size_t>(f)]) + " outside [-1,1]: " +
                        format_double(v));
    }
  }
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kWellsHeader = "station_id,lat,lon,year,max_gwl_m,min_gwl_m";
constexpr std::string_view kGldasHeader = "serial_id,lat,lon,year,max_gws_mm,min_gws_mm";

std::string opt_to_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
}  // namespace

WellsTable parse_wells_csv(std::istream& in, std::optional<YearRange> years) {
  expect_header(in, kWellsHeader, "wells CSV");
  WellsTable table;
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::size_t lineno = row + 1;
    auto f = split_csv_line(line);
    if (f.size() != 6) throw FormatError("row " + std::to_string(row) + ": expected 6 fields", lineno);
    WellObservation obs;
    obs.station_id = std::string(f[0]);
    if (obs.station_id.empty()) throw FormatError("row " + std::to_string(row) + ": empty station_id", lineno);
    auto lat = parse_double(f[1]);
    auto lon = parse_double(f[2]);
    if (!lat || !lon) throw FormatError("row " + std::to_string(row) + ": non-numeric coordinate", lineno);
    obs.location = {*lat, *lon};
    if (!obs.location.valid()) throw FormatError("row " + std::to_string(row) + ": coordinate out of range", lineno);
    auto year = parse_int(f[3]);
    if (!year) throw FormatError("row " + std::to_string(row) + ": non-integer year", lineno);
    obs.year = static_cast<int>(*year);
    if (years && !years->contains(obs.year)) {
      throw FormatError("row " + std::to_string(row) + ": year " + std::to_string(obs.year) + " outside range",
                        lineno);
    }
    for (int k = 0; k < 2; ++k) {
      auto text = f[4 + k];
      if (text.empty()) continue;
      auto v = parse_double(text);
      if (!v) throw FormatError("row " + std::to_string(row) + ": non-numeric groundwater level", lineno);
      (k == 0 ? obs.max_gwl : obs.min_gwl) = *v;
    }
    ++table.summary.input_rows;
    if (!obs.max_gwl && !obs.min_gwl) {
      ++table.summary.rejected;
      table.rejected_rows.push_back(row);
      continue;
    }
    if (!seen.emplace(obs.station_id, obs.year).second) {
      throw DuplicateError("row " + std::to_string(row) + ": duplicate (station_id, year) = (" + obs.station_id +
                           ", " + std::to_string(obs.year) + ")");
    }
    if (obs.max_gwl && obs.min_gwl) {
      ++table.summary.both;
    } else if (obs.max_gwl) {
      ++table.summary.max_only;
    } else {
      ++table.summary.min_only;
    }
    table.observations.push_back(std::move(obs));
  }
  return table;
}

WellsTable read_wells_csv(const std::filesystem::path& path, std::optional<YearRange> years) {
  auto in = open_input(path);
  try {
    return parse_wells_csv(in, years);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.line());
  }
}

void write_wells_csv(std::span<const WellObservation> wells, const std::filesystem::path& path) {
  std::string out(kWellsHeader);
  out += '\n';
  for (const auto& w : wells) {
    out += w.station_id + ',' + format_double(w.location.lat) + ',' + format_double(w.location.lon) + ',' +
           std::to_string(w.year) + ',' + opt_to_text(w.max_gwl) + ',' + opt_to_text(w.min_gwl) + '\n';
  }
  write_text_file(path, out);
}

std::vector<GldasCell> parse_gldas_csv(std::istream& in) {
  expect_header(in, kGldasHeader, "GLDAS CSV");
  std::vector<GldasCell> cells;
  std::set<std::pair<int, int>> seen;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 6) throw FormatError("expected 6 fields", lineno);
    auto serial = parse_int(f[0]);
    auto lat = parse_double(f[1]);
    auto lon = parse_double(f[2]);
    auto year = parse_int(f[3]);
    auto mx = parse_double(f[4]);
    auto mn = parse_double(f[5]);
    if (!serial || !lat || !lon || !year || !mx || !mn) throw FormatError("non-numeric field", lineno);
    GldasCell cell;
    cell.serial_id = static_cast<int>(*serial);
    cell.centroid = {*lat, *lon};
    cell.year = static_cast<int>(*year);
    cell.max_gws = *mx;
    cell.min_gws = *mn;
    if (!cell.centroid.valid()) throw FormatError("centroid out of range", lineno);
    if (cell.min_gws > cell.max_gws) throw FormatError("min_gws_mm exceeds max_gws_mm", lineno);
    if (!seen.emplace(cell.serial_id, cell.year).second) {
      throw DuplicateError("line " + std::to_string(lineno) + ": duplicate (serial_id, year)");
    }
    cells.push_back(cell);
  }
  return cells;
}

std::vector<GldasCell> read_gldas_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_gldas_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.line());
  }
}

void write_gldas_csv(std::span<const GldasCell> cells, const std::filesystem::path& path) {
  std::string out(kGldasHeader);
  out += '\n';
  for (const auto& c : cells) {
    out += std::to_string(c.serial_id) + ',' + format_double(c.centroid.lat) + ',' + format_double(c.centroid.lon) +
           ',' + std::to_string(c.year) + ',' + format_double(c.max_gws) + ',' + format_double(c.min_gws) + '\n';
  }
  write_text_file(path, out);
}

namespace {
std::string hgf_header() {
  std::string h = "point_id,lat,lon";
  for (auto name : kHgfNames) {
    h += ',';
    h += name;
  }
  return h;
}
}  // namespace

HgfTable read_hgf_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string header = hgf_header();
  expect_header(in, header, path.string());
  HgfTable table;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 3 + kHgfCount) throw FormatError(path.string() + ": wrong field count", lineno);
    auto lat = parse_double(f[1]);
    auto lon = parse_double(f[2]);
    if (!lat || !lon) throw FormatError(path.string() + ": non-numeric coordinate", lineno);
    HgfVector h;
    for (std::size_t k = 0; k < kHgfCount; ++k) {
      auto v = parse_double(f[3 + k]);
      if (!v) throw FormatError(path.string() + ": non-numeric " + std::string(kHgfNames[k]), lineno);
      h.values[k] = *v;
    }
    table.ids.emplace_back(f[0]);
    table.points.push_back({*lat, *lon});
    table.hgf.push_back(h);
  }
  return table;
}

void write_hgf_csv(const HgfTable& table, const std::filesystem::path& path) {
  if (table.ids.size() != table.points.size() || table.points.size() != table.hgf.size()) {
    throw SchemaError("HGF table columns have different lengths");
  }
  std::string out = hgf_header();
  out += '\n';
  for (std::size_t i = 0; i < table.points.size(); ++i) {
    out += table.ids[i] + ',' + format_double(table.points[i].lat) + ',' + format_double(table.points[i].lon);
    for (double v : table.hgf[i].values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------

std::string to_geojson(std::span<const PointFeature> features) {
  using nlohmann::ordered_json;
  ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = ordered_json::array();
  for (const auto& f : features) {
    ordered_json props = ordered_json::object();
    for (const auto& [key, value] : f.properties) {
      if (!is_identifier(key)) throw SchemaError("GeoJSON property key is not an identifier: '" + key + "'");
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) {
                props[key] = v;
              } else {
                props[key] = nullptr;
              }
            } else {
              props[key] = v;
            }
          },
          value);
    }
    ordered_json feat;
    feat["type"] = "Feature";
    feat["geometry"] = {{"type", "Point"}, {"coordinates", {f.point.lon, f.point.lat}}};
    feat["properties"] = std::move(props);
    fc["features"].push_back(std::move(feat));
  }
  return fc.dump() + "\n";
}

void write_geojson(std::span<const PointFeature> features, const std::filesystem::path& path) {
  write_text_file(path, to_geojson(features));
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace aqd
