#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "aqd/analysis.hpp"
#include "aqd/errors.hpp"
#include "aqd/synthdata.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace aqd;
using namespace aqd::synth;

namespace {

WorldConfig small_config(std::uint64_t seed = 7) {
  WorldConfig c;
  c.seed = seed;
  c.width_m = 60'000;
  c.height_m = 40'000;
  c.years = {2001, 2002, 2003, 2004};
  c.n_stations = 80;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  c.gldas_cell_m = 5'000;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.years = {2001, 2002};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.n_stations = 100'000;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.station_min_fraction = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.noise_sd = -1;
  CHECK_THROWS_AS(generate_world(c), ConfigError);
}

TEST_CASE("generated world") {
  const auto cfg = small_config();
  const auto w = generate_world(cfg);

  CHECK(w.fishnet.size() == 30 * 20);
  CHECK(w.fishnet_hgf.size() == w.fishnet.size());
  CHECK(w.features.size() == kHgfCount);
  CHECK(w.cells.size() == 3 * 2 * cfg.years.size());

  SUBCASE("min never exceeds max") {
    for (int y : cfg.years) {
      for (const auto& t : true_field(w, y)) CHECK(t.min_gwl <= t.max_gwl);
    }
    for (const auto& c : w.cells) CHECK(c.min_gws <= c.max_gws);
    CHECK_THROWS_AS(true_field(w, 1999), CoverageError);
  }
  SUBCASE("max level drifts by the configured trend") {
    for (std::size_t k = 1; k < cfg.years.size(); ++k) {
      const auto& a = true_field(w, cfg.years[k - 1]);
      const auto& b = true_field(w, cfg.years[k]);
      double shift = 0;
      for (std::size_t i = 0; i < a.size(); ++i) shift += b[i].max_gwl - a[i].max_gwl;
      CHECK(std::abs(shift / static_cast<double>(a.size()) - cfg.trend) < 1e-9);
    }
    for (std::size_t i = 0; i < w.fishnet.size(); i += 37) {
      analysis::PointSeries s;
      s.years = cfg.years;
      for (int y : cfg.years) s.values.push_back(true_field(w, y)[i].max_gwl);
      CHECK(analysis::sens_slope(s) == doctest::Approx(cfg.trend).epsilon(1e-9));
    }
  }
  SUBCASE("storage falls as water tables deepen") {
    // Deep-season storage pairs with the deep (max) level and vice versa.
    std::map<std::pair<int, int>, std::array<double, 3>> sums;
    for (int y : cfg.years) {
      const auto& f = true_field(w, y);
      for (std::size_t i = 0; i < f.size(); ++i) {
        auto& s = sums[{y, w.fishnet_serial[i]}];
        s[0] += f[i].max_gwl;
        s[1] += f[i].min_gwl;
        s[2] += 1;
      }
    }
    std::vector<double> min_gws, mean_max, max_gws, mean_min;
    std::map<int, std::vector<std::pair<double, double>>> by_year;
    for (const auto& c : w.cells) {
      const auto& s = sums.at({c.year, c.serial_id});
      min_gws.push_back(c.min_gws);
      mean_max.push_back(s[0] / s[2]);
      max_gws.push_back(c.max_gws);
      mean_min.push_back(s[1] / s[2]);
      by_year[c.year].push_back({s[0] / s[2], c.min_gws});
    }
    CHECK(oracle::pearson(min_gws, mean_max) < -0.9);
    CHECK(oracle::pearson(max_gws, mean_min) < -0.9);
    for (auto& [y, v] : by_year) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i].second < v[i - 1].second);
    }
  }
  SUBCASE("stations sit on fishnet points") {
    for (const auto& o : w.stations) {
      CHECK(o.max_gwl.has_value());
      if (o.min_gwl) CHECK(*o.min_gwl <= *o.max_gwl + 5 * cfg.noise_sd);
    }
    CHECK(w.station_fishnet_index.size() == cfg.n_stations);
  }
}

TEST_CASE("noise-free stations equal the true field") {
  auto cfg = small_config(11);
  cfg.noise_sd = 0.0;
  const auto w = generate_world(cfg);
  std::map<std::string, std::size_t> where;
  std::size_t k = 0;
  for (const auto& o : w.stations) {
    if (!where.count(o.station_id)) where[o.station_id] = w.station_fishnet_index[k++];
  }
  for (const auto& o : w.stations) {
    const auto& t = true_field(w, o.year)[where.at(o.station_id)];
    CHECK(*o.max_gwl == t.max_gwl);
    if (o.min_gwl) CHECK(*o.min_gwl == t.min_gwl);
    CHECK(o.location == w.fishnet[where.at(o.station_id)]);
  }
}

TEST_CASE("shift year adds an anomaly in that year only") {
  auto cfg = small_config(5);
  const auto plain = generate_world(cfg);
  cfg.shift_year = 2003;
  const auto shifted = generate_world(cfg);
  CHECK(true_field(plain, 2002)[0].max_gwl == true_field(shifted, 2002)[0].max_gwl);
  double diff = 0;
  for (std::size_t i = 0; i < plain.fishnet.size(); ++i) {
    diff += std::abs(true_field(plain, 2003)[i].max_gwl - true_field(shifted, 2003)[i].max_gwl);
  }
  CHECK(diff > 0.1 * static_cast<double>(plain.fishnet.size()));
}

TEST_CASE("deterministic bundles") {
  TempDir a, b;
  auto paths = [](const TempDir& d) {
    BundlePaths p;
    p.dem = d / "dem.asc";
    p.nir = d / "nir.asc";
    p.red = d / "red.asc";
    p.swir = d / "swir.asc";
    p.sy = d / "sy.asc";
    p.clay = d / "clay.asc";
    p.lithology = d / "lith.asc";
    p.wells = d / "wells.csv";
    p.gldas = d / "gldas.csv";
    p.truth = d / "truth.csv";
    return p;
  };
  const auto cfg = small_config(3);
  write_bundle(generate_world(cfg), paths(a));
  write_bundle(generate_world(cfg), paths(b));
  for (const char* f : {"dem.asc", "sy.asc", "lith.asc", "wells.csv", "gldas.csv", "truth.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto wells = read_wells_csv(a / "wells.csv", YearRange{2001, 2004});
  CHECK(wells.observations.size() == generate_world(cfg).stations.size());
  CHECK(read_gldas_csv(a / "gldas.csv").size() == 24);
  const auto dem = read_ascii_grid(a / "dem.asc");
  CHECK(dem.ncols() >= 120);
  CHECK(dem.count_valid() == dem.size());

  auto other = cfg;
  other.seed = 4;
  TempDir c;
  write_bundle(generate_world(other), paths(c));
  CHECK(slurp(a / "dem.asc") != slurp(c / "dem.asc"));
}
