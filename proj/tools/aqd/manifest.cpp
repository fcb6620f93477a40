#include "manifest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "aqd/errors.hpp"

namespace aqd::cli {

namespace {

constexpr std::array kKnownKeys{
    "seed", "years", "work_dir", "extent", "map_units", "fishnet_cell_m",
    "dem", "nir", "red", "swir", "sy", "clay", "lithology", "wells", "gldas", "truth",
    "terrain.stream_threshold", "terrain.beta_min_deg", "terrain.twi", "terrain.tri", "terrain.dd_radius_cells",
    "forest.n_trees", "forest.min_leaf", "forest.max_depth", "forest.mtry", "forest.bootstrap",
    "upsampler.n_trees", "upsampler.min_leaf", "upsampler.max_depth", "upsampler.mtry", "upsampler.bootstrap",
    "upsampler.use_year",
    "test_fraction", "split_seed", "threads", "use_year", "dedup_radius_m", "clamp", "rep_stat",
    "idw.power", "idw.k", "eval.loyo", "eval.holdout_fraction", "eval.pd_background",
    "synth.origin_lat", "synth.origin_lon", "synth.width_m", "synth.height_m", "synth.dem_cell_m",
    "synth.gldas_cell_m", "synth.n_stations", "synth.station_min_fraction", "synth.station_year_coverage",
    "synth.noise_sd", "synth.trend", "synth.shift_year", "synth.shift_m",
    "serve.bind",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Manifest Manifest::load(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  return parse(text, dir);
}

Manifest Manifest::parse(std::string_view text, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_ = base_dir;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("manifest line is not 'key = value'", line_no);
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) throw FormatError("manifest line has an empty key", line_no);
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw FormatError("unknown manifest key '" + key + "'", line_no);
    }
    if (!m.kv_.emplace(key, value).second) throw FormatError("manifest key '" + key + "' given twice", line_no);
  }
  if (!m.has("seed")) throw ConfigError("manifest must set 'seed'");
  return m;
}

bool Manifest::has(std::string_view key) const {
  auto it = kv_.find(key);
  return it != kv_.end() && !it->second.empty();
}

std::optional<std::string> Manifest::opt(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return kv_.find(key)->second;
}

std::string Manifest::str(std::string_view key) const {
  auto v = opt(key);
  if (!v) throw ConfigError("manifest is missing '" + std::string(key) + "'");
  return *v;
}

double Manifest::real(std::string_view key, double fallback) const {
  auto v = opt(key);
  if (!v) return fallback;
  auto d = parse_double(*v);
  if (!d || !std::isfinite(*d)) throw ConfigError("manifest '" + std::string(key) + "' is not a number: " + *v);
  return *d;
}

long long Manifest::integer(std::string_view key, long long fallback) const {
  auto v = opt(key);
  if (!v) return fallback;
  auto i = parse_int(*v);
  if (!i) throw ConfigError("manifest '" + std::string(key) + "' is not an integer: " + *v);
  return *i;
}

bool Manifest::flag(std::string_view key, bool fallback) const {
  auto v = opt(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("manifest '" + std::string(key) + "' is not a boolean: " + *v);
}

std::filesystem::path Manifest::path(std::string_view key) const {
  std::filesystem::path p = str(key);
  return p.is_absolute() ? p : base_ / p;
}

std::optional<std::filesystem::path> Manifest::opt_path(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return path(key);
}

std::uint64_t Manifest::seed() const {
  const auto v = str("seed");
  try {
    std::size_t used = 0;
    const auto s = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw ConfigError("manifest 'seed' is not an unsigned integer: " + v);
  }
}

// "2001-2010" or "2001, 2003, 2005", or a mix of both.
std::vector<int> Manifest::years() const {
  std::vector<int> out;
  std::stringstream ss(str("years"));
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto t = std::string(trim(part));
    const auto dash = t.find('-', 1);
    auto as_int = [&](std::string_view s) {
      auto v = parse_int(trim(s));
      if (!v) throw ConfigError("manifest 'years' has a bad entry: " + t);
      return static_cast<int>(*v);
    };
    if (dash == std::string::npos) {
      out.push_back(as_int(t));
    } else {
      const int a = as_int(std::string_view(t).substr(0, dash));
      const int b = as_int(std::string_view(t).substr(dash + 1));
      if (b < a) throw ConfigError("manifest 'years' range is reversed: " + t);
      for (int y = a; y <= b; ++y) out.push_back(y);
    }
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw ConfigError("manifest 'years' repeats a year");
  if (out.empty()) throw ConfigError("manifest 'years' is empty");
  return out;
}

std::filesystem::path Manifest::work_dir() const { return has("work_dir") ? path("work_dir") : base_ / "work"; }

BoundingBox Manifest::extent() const {
  if (!has("extent")) return world_config().extent();
  std::stringstream ss(str("extent"));
  std::string part;
  std::vector<double> v;
  while (std::getline(ss, part, ',')) {
    auto d = parse_double(trim(part));
    if (!d) throw ConfigError("manifest 'extent' has a bad number: " + part);
    v.push_back(*d);
  }
  if (v.size() != 4 || v[2] < v[0] || v[3] < v[1]) {
    throw ConfigError("manifest 'extent' must be min_lat,min_lon,max_lat,max_lon");
  }
  return {v[0], v[1], v[2], v[3]};
}

double Manifest::fishnet_cell_m() const { return real("fishnet_cell_m", 2000.0); }

terrain::TerrainConfig Manifest::terrain() const {
  terrain::TerrainConfig t;
  const auto units = opt("map_units").value_or("degrees");
  if (units == "degrees") {
    t.meters_per_map_unit = kMetersPerDegree;
  } else if (units == "meters") {
    t.meters_per_map_unit = 1.0;
  } else {
    throw ConfigError("manifest 'map_units' must be degrees or meters");
  }
  t.stream_threshold = real("terrain.stream_threshold", t.stream_threshold);
  t.beta_min_deg = real("terrain.beta_min_deg", t.beta_min_deg);
  const auto twi = opt("terrain.twi").value_or("literal");
  if (twi == "literal") {
    t.twi = terrain::TwiVariant::literal;
  } else if (twi == "tangent") {
    t.twi = terrain::TwiVariant::tangent;
  } else {
    throw ConfigError("manifest 'terrain.twi' must be literal or tangent");
  }
  const auto tri = opt("terrain.tri").value_or("literal");
  if (tri == "literal") {
    t.tri = terrain::TriVariant::literal;
  } else if (tri == "riley") {
    t.tri = terrain::TriVariant::riley;
  } else {
    throw ConfigError("manifest 'terrain.tri' must be literal or riley");
  }
  const auto dd = integer("terrain.dd_radius_cells", static_cast<long long>(t.dd_radius_cells));
  if (dd < 0) throw ConfigError("manifest 'terrain.dd_radius_cells' is negative");
  t.dd_radius_cells = static_cast<std::size_t>(dd);
  return t;
}

forest::ForestParams Manifest::forest_params(std::string_view prefix) const {
  const std::string p(prefix);
  auto count = [&](const std::string& key, long long fallback) {
    // upsampler.* keys fall back to forest.* ones
    const auto general = "forest." + key;
    const long long base = integer(general, fallback);
    const long long v = p == "forest" ? base : integer(p + "." + key, base);
    if (v < 0) throw ConfigError("manifest '" + p + "." + key + "' is negative");
    return static_cast<std::size_t>(v);
  };
  forest::ForestParams f;
  f.seed = seed();
  f.n_trees = count("n_trees", static_cast<long long>(f.n_trees));
  f.min_leaf = count("min_leaf", static_cast<long long>(f.min_leaf));
  if (p != "forest" && !has(p + ".min_leaf")) f.min_leaf = std::max<std::size_t>(f.min_leaf, 20);
  if (has(p + ".max_depth") || has("forest.max_depth")) f.max_depth = count("max_depth", 0);
  if (has(p + ".mtry") || has("forest.mtry")) f.mtry = count("mtry", 0);
  f.bootstrap = flag(p + ".bootstrap", flag("forest.bootstrap", true));
  return f;
}

pipeline::TrainOptions Manifest::train_options() const {
  pipeline::TrainOptions o;
  o.params = forest_params("forest");
  o.test_fraction = real("test_fraction", o.test_fraction);
  o.split_seed = static_cast<std::uint64_t>(integer("split_seed", static_cast<long long>(seed())));
  o.use_year = flag("use_year", true);
  o.threads = static_cast<std::size_t>(std::max<long long>(1, integer("threads", 1)));
  return o;
}

pipeline::UpsamplerOptions Manifest::upsampler_options() const {
  pipeline::UpsamplerOptions o;
  o.params = forest_params("upsampler");
  o.test_fraction = real("test_fraction", o.test_fraction);
  o.split_seed = static_cast<std::uint64_t>(integer("split_seed", static_cast<long long>(seed())));
  o.use_year = flag("upsampler.use_year", false);
  o.threads = static_cast<std::size_t>(std::max<long long>(1, integer("threads", 1)));
  return o;
}

pipeline::PgtOptions Manifest::pgt_options() const {
  pipeline::PgtOptions o;
  o.dedup_radius_m = real("dedup_radius_m", o.dedup_radius_m);
  o.clamp = flag("clamp", false);
  return o;
}

pipeline::RepStat Manifest::rep_stat() const {
  const auto v = opt("rep_stat").value_or("mode");
  if (v == "mode") return pipeline::RepStat::mode;
  if (v == "median") return pipeline::RepStat::median;
  throw ConfigError("manifest 'rep_stat' must be mode or median");
}

synth::WorldConfig Manifest::world_config() const {
  synth::WorldConfig c;
  c.seed = seed();
  if (has("years")) c.years = years();
  c.origin_lat = real("synth.origin_lat", c.origin_lat);
  c.origin_lon = real("synth.origin_lon", c.origin_lon);
  c.width_m = real("synth.width_m", c.width_m);
  c.height_m = real("synth.height_m", c.height_m);
  c.dem_cell_m = real("synth.dem_cell_m", c.dem_cell_m);
  c.fishnet_cell_m = fishnet_cell_m();
  c.gldas_cell_m = real("synth.gldas_cell_m", c.gldas_cell_m);
  const auto n = integer("synth.n_stations", static_cast<long long>(c.n_stations));
  if (n < 0) throw ConfigError("manifest 'synth.n_stations' is negative");
  c.n_stations = static_cast<std::size_t>(n);
  c.station_min_fraction = real("synth.station_min_fraction", c.station_min_fraction);
  c.station_year_coverage = real("synth.station_year_coverage", c.station_year_coverage);
  c.noise_sd = real("synth.noise_sd", c.noise_sd);
  c.trend = real("synth.trend", c.trend);
  if (has("synth.shift_year")) c.shift_year = static_cast<int>(integer("synth.shift_year", 0));
  c.shift_m = real("synth.shift_m", c.shift_m);
  c.terrain = terrain();
  c.validate();
  return c;
}

synth::BundlePaths Manifest::bundle_paths() const {
  synth::BundlePaths p;
  p.dem = path("dem");
  p.nir = path("nir");
  p.red = path("red");
  p.swir = path("swir");
  p.sy = path("sy");
  p.clay = path("clay");
  p.lithology = path("lithology");
  p.wells = path("wells");
  p.gldas = path("gldas");
  if (auto t = opt_path("truth")) p.truth = *t;
  return p;
}

}  // namespace aqd::cli
