#include <random>
#include <sstream>

#include "aqd/errors.hpp"
#include "aqd/geodata.hpp"
#include "doctest.h"
#include "json.hpp"
#include "temp_dir.hpp"

using namespace aqd;

TEST_CASE("ascii grid parses a 2x2 file") {
  std::istringstream in("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n3 4\n");
  const auto r = parse_ascii_grid(in);
  CHECK(r.ncols() == 2);
  CHECK(r.nrows() == 2);
  CHECK(std::vector<double>(r.values().begin(), r.values().end()) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("ascii grid flags the nodata sentinel") {
  std::istringstream in("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n5 -9999\n");
  const auto r = parse_ascii_grid(in);
  CHECK(r.valid(0));
  CHECK_FALSE(r.valid(1));
  CHECK(r.count_valid() == 1);
}

TEST_CASE("ascii grid errors carry line numbers") {
  std::istringstream bad_key("ncols 2\nrows 2\n");
  try {
    parse_ascii_grid(bad_key);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream short_values("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2 3\n");
  CHECK_THROWS_AS(parse_ascii_grid(short_values), FormatError);
  CHECK_THROWS_AS(read_ascii_grid("/nonexistent/dem.asc"), IoError);
}

TEST_CASE("ascii grid round-trips random grids bit-exactly") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int trial = 0; trial < 25; ++trial) {
    GridSpec spec{1 + rng() % 9, 1 + rng() % 9, u(rng), u(rng), 0.001 + std::abs(u(rng)), -9999.0};
    std::vector<double> v(spec.size());
    for (auto& x : v) x = (rng() % 10 == 0) ? -9999.0 : u(rng) / 7.0;
    const Raster r(spec, v);
    std::ostringstream a;
    write_ascii_grid(r, a);
    std::istringstream in(a.str());
    const auto back = parse_ascii_grid(in);
    CHECK(back == r);
    std::ostringstream b;
    write_ascii_grid(back, b);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("wells csv parses present and absent levels") {
  std::istringstream in(
      "station_id,lat,lon,year,max_gwl_m,min_gwl_m\n"
      "S1,24.0,90.0,2008,7.5,3.2\n"
      "S2,24.0,90.0,2008,7.5,\n");
  const auto t = parse_wells_csv(in);
  REQUIRE(t.observations.size() == 2);
  CHECK(t.observations[0].max_gwl == 7.5);
  CHECK(t.observations[0].min_gwl == 3.2);
  CHECK(t.observations[1].max_gwl == 7.5);
  CHECK_FALSE(t.observations[1].min_gwl.has_value());
}

TEST_CASE("wells csv summary counts by hand") {
  std::string text = "station_id,lat,lon,year,max_gwl_m,min_gwl_m\n";
  for (int i = 0; i < 10; ++i) {
    text += "S" + std::to_string(i) + ",24,90,2008,7.5," + (i % 3 == 0 && i > 0 ? "" : "3.0") + "\n";
  }
  std::istringstream in(text);
  const auto t = parse_wells_csv(in);
  CHECK(t.summary.both == 7);
  CHECK(t.summary.max_only == 3);
  CHECK(t.summary.min_only == 0);
  CHECK(t.summary.input_rows == 10);
}

TEST_CASE("wells csv rejects empty rows, bad coordinates and duplicates") {
  std::istringstream empty_levels(
      "station_id,lat,lon,year,max_gwl_m,min_gwl_m\nS1,24,90,2008,,\nS2,24,90,2008,1,\n");
  const auto t = parse_wells_csv(empty_levels);
  CHECK(t.summary.rejected == 1);
  CHECK(t.observations.size() + t.summary.rejected == t.summary.input_rows);
  CHECK(t.rejected_rows == std::vector<std::size_t>{1});

  std::istringstream bad("station_id,lat,lon,year,max_gwl_m,min_gwl_m\nS1,abc,90,2008,1,\n");
  try {
    parse_wells_csv(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream dup("station_id,lat,lon,year,max_gwl_m,min_gwl_m\nS1,24,90,2008,1,\nS1,24,90,2008,2,\n");
  CHECK_THROWS_AS(parse_wells_csv(dup), DuplicateError);
}

TEST_CASE("wells csv preserves order") {
  std::istringstream in(
      "station_id,lat,lon,year,max_gwl_m,min_gwl_m\nC,24,90,2009,1,\nA,24,90,2008,2,\nB,24,90,2010,3,\n");
  const auto t = parse_wells_csv(in);
  REQUIRE(t.observations.size() == 3);
  CHECK(t.observations[0].station_id == "C");
  CHECK(t.observations[1].station_id == "A");
  CHECK(t.observations[2].station_id == "B");
}

TEST_CASE("gldas csv round trip and min > max rejection") {
  TempDir dir;
  std::vector<GldasCell> cells{{1, {23.5, 89.5}, 2001, 600.25, 540.5, std::nullopt},
                               {2, {23.5, 89.75}, 2001, 610.0, 555.125, std::nullopt}};
  write_gldas_csv(cells, dir / "g.csv");
  const auto back = read_gldas_csv(dir / "g.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].serial_id == 2);
  CHECK(back[1].min_gws == 555.125);
  std::istringstream bad("serial_id,lat,lon,year,max_gws_mm,min_gws_mm\n1,23,89,2001,5,6\n");
  CHECK_THROWS_AS(parse_gldas_csv(bad), FormatError);
}

TEST_CASE("geojson output") {
  CHECK(nlohmann::json::parse(to_geojson({}))["features"].empty());

  std::vector<PointFeature> one{{{23.8, 90.4}, {{"max_gwl", 7.5}}}};
  const auto j = nlohmann::json::parse(to_geojson(one));
  CHECK(j["type"] == "FeatureCollection");
  REQUIRE(j["features"].size() == 1);
  CHECK(j["features"][0]["geometry"]["type"] == "Point");
  CHECK(j["features"][0]["geometry"]["coordinates"][0].get<double>() == 90.4);
  CHECK(j["features"][0]["geometry"]["coordinates"][1].get<double>() == 23.8);
}

TEST_CASE("geojson re-parse reproduces inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat(-80, 80), lon(-170, 170), val(-1e3, 1e3);
  std::vector<PointFeature> fs;
  for (int i = 0; i < 50; ++i) {
    fs.push_back({{lat(rng), lon(rng)}, {{"v", val(rng)}, {"id", std::string("p") + std::to_string(i)}, {"k", std::int64_t{i}}}});
  }
  TempDir dir;
  write_geojson(fs, dir / "out.geojson");
  const auto j = nlohmann::json::parse(read_text_file(dir / "out.geojson"));
  REQUIRE(j["features"].size() == fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto& f = j["features"][i];
    CHECK(std::abs(f["geometry"]["coordinates"][0].get<double>() - fs[i].point.lon) < 1e-6);
    CHECK(std::abs(f["geometry"]["coordinates"][1].get<double>() - fs[i].point.lat) < 1e-6);
    CHECK(std::abs(f["properties"]["v"].get<double>() - std::get<double>(fs[i].properties[0].second)) < 1e-6);
    CHECK(f["properties"]["k"].get<int>() == static_cast<int>(i));
  }
}

TEST_CASE("haversine") {
  const GeoPoint a{23.8, 90.4};
  CHECK(haversine_m(a, a) == 0.0);
  CHECK(haversine_m({0, 0}, {0, 1}) == doctest::Approx(6371000.0 * kPi / 180.0).epsilon(1e-12));
  CHECK(std::abs(haversine_m({0, 0}, {0, 1}) - 111195.0) < 1.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-89, 89), lon(-179, 179);
  for (int i = 0; i < 500; ++i) {
    const GeoPoint p{lat(rng), lon(rng)}, q{lat(rng), lon(rng)}, r{lat(rng), lon(rng)};
    CHECK(haversine_m(p, q) == haversine_m(q, p));
    CHECK(haversine_m(p, q) >= 0.0);
    CHECK(haversine_m(p, r) <= (haversine_m(p, q) + haversine_m(q, r)) * (1 + 1e-6));
  }
}

TEST_CASE("nearest index prefers the lowest index on ties") {
  std::vector<GeoPoint> c{{0, 1}, {0, -1}, {0, 3}};
  CHECK(nearest_index(c, {0, 0}) == 0);
  CHECK(nearest_index(c, {0, 2.9}) == 2);
  CHECK_THROWS_AS(nearest_index(std::span<const GeoPoint>{}, {0, 0}), DataError);
}

TEST_CASE("hgf csv round trip") {
  TempDir dir;
  HgfTable t;
  for (int i = 0; i < 3; ++i) {
    t.ids.push_back("P" + std::to_string(i));
    t.points.push_back({23.0 + i * 0.1, 90.0});
    HgfVector h;
    for (std::size_t k = 0; k < kHgfCount; ++k) h.values[k] = 0.1 * static_cast<double>(k) + i;
    h[Hgf::sy] = 0.1;
    h[Hgf::ndvi] = 0.2;
    h[Hgf::ndwi] = -0.2;
    t.hgf.push_back(h);
  }
  write_hgf_csv(t, dir / "h.csv");
  const auto back = read_hgf_csv(dir / "h.csv");
  CHECK(back.ids == t.ids);
  CHECK(back.points == t.points);
  CHECK(back.hgf == t.hgf);
}

TEST_CASE("format_double is shortest round trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -0.0}) CHECK(*parse_double(format_double(v)) == v);
  CHECK(format_double(0.1) == "0.1");
  CHECK_FALSE(parse_double("1.0x").has_value());
  CHECK_FALSE(parse_double("").has_value());
}
