#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "aqd/analysis.hpp"
#include "aqd/errors.hpp"
#include "aqd/evaluation.hpp"
#include "aqd/forest.hpp"
#include "aqd/pipeline.hpp"
#include "aqd/synthdata.hpp"
#include "aqd/terrain.hpp"
#include "artifacts.hpp"
#include "log.hpp"

namespace aqd::cli {

using ojson = nlohmann::ordered_json;
using pipeline::FishnetData;
using pipeline::StationData;

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::string stage) : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {
    log(LogLevel::info, "stage start", {{"stage", stage_}});
  }
  ~StageTimer() {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    log(LogLevel::info, "stage end", {{"stage", stage_}, {"elapsed_ms", std::llround(ms)}});
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

ojson metrics_json(const std::optional<eval::Metrics>& m) {
  if (!m) return nullptr;
  return {{"r2", m->r2}, {"mse", m->mse}, {"n", m->n}};
}

ojson metrics_json(const eval::Metrics& m) { return metrics_json(std::optional<eval::Metrics>(m)); }

// Feature -> importance, largest first.
ojson ranked_importances(const forest::Forest& f) {
  const auto& imp = f.importances();
  std::vector<std::size_t> order(imp.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return imp[a] > imp[b]; });
  ojson out = ojson::array();
  for (auto i : order) out.push_back({{"feature", f.feature_names()[i]}, {"importance", imp[i]}});
  return out;
}

ojson model_report_json(const pipeline::GwlModel& model) {
  ojson j;
  j["test"] = metrics_json(model.report.test);
  j["n_train"] = model.report.n_train;
  j["n_test"] = model.report.n_test;
  ojson by_year = ojson::array();
  for (const auto& [y, m] : model.report.test_by_year) {
    auto e = metrics_json(m);
    e["year"] = y;
    by_year.push_back(e);
  }
  j["test_by_year"] = by_year;
  j["warnings"] = model.report.warnings;
  j["importances"] = ranked_importances(model.forest);
  return j;
}

void write_json(const fs::path& path, const ojson& j) { write_text_file(path, j.dump(2) + "\n"); }

WellsTable load_wells(const Manifest& m) {
  const auto years = m.years();
  auto table = read_wells_csv(m.path("wells"), YearRange{years.front(), years.back()});
  const std::set<int> keep(years.begin(), years.end());
  std::erase_if(table.observations, [&](const WellObservation& o) { return !keep.count(o.year); });
  return table;
}

FishnetData load_fishnet(const WorkPaths& wp) {
  auto t = read_hgf_csv(require_artifact(wp.fishnet_hgf(), "features"));
  return {std::move(t.ids), std::move(t.points), std::move(t.hgf)};
}

StationData load_stations(const Manifest& m, const WorkPaths& wp) {
  StationData d;
  d.observations = load_wells(m).observations;
  d.hgf = hgf_by_id(read_hgf_csv(require_artifact(wp.station_hgf(), "features")));
  return d;
}

pipeline::FeatureSchema task1_schema(const FishnetData& fishnet, const StationData& stations) {
  std::vector<HgfVector> st;
  for (const auto& [id, h] : stations.hgf) st.push_back(h);
  return pipeline::FeatureSchema::from_hgfs({fishnet.hgf, st});
}

std::map<int, HgfVector> load_rep_hgf(const WorkPaths& wp) {
  const auto t = read_hgf_csv(require_artifact(wp.rep_hgf(), "train-upsampler"));
  std::map<int, HgfVector> out;
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    auto s = parse_int(t.ids[i]);
    if (!s) throw FormatError(wp.rep_hgf().string() + ": serial id '" + t.ids[i] + "' is not an integer");
    out.emplace(static_cast<int>(*s), t.hgf[i]);
  }
  return out;
}

std::vector<pipeline::UpsampleRow> upsample_rows(std::span<const GldasCell> cells,
                                                 const pipeline::PseudoGroundTruth& pgt,
                                                 const std::map<int, HgfVector>& rep) {
  const auto centroids = pipeline::cell_centroids(cells);
  std::vector<GeoPoint> pts;
  pts.reserve(pgt.points.size());
  for (const auto& p : pgt.points) pts.push_back(p.location);
  const auto serials = pipeline::map_to_serials(pts, centroids);
  return pipeline::build_upsample_rows(cells, pgt, serials, rep);
}

pipeline::FeatureSchema task2_schema(const FishnetData& fishnet, const pipeline::PseudoGroundTruth& pgt) {
  std::vector<HgfVector> ph;
  ph.reserve(pgt.points.size());
  for (const auto& p : pgt.points) ph.push_back(p.hgf);
  return pipeline::FeatureSchema::from_hgfs({fishnet.hgf, ph});
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_synth(const Manifest& m) {
  StageTimer timer("synth");
  const auto cfg = m.world_config();
  const auto world = synth::generate_world(cfg);
  synth::write_bundle(world, m.bundle_paths());
  std::size_t both = 0, max_only = 0, min_only = 0;
  for (const auto& o : world.stations) {
    if (o.max_gwl && o.min_gwl) ++both;
    else if (o.max_gwl) ++max_only;
    else ++min_only;
  }
  summary("synth", {{"fishnet_points", world.fishnet.size()},
                    {"stations", world.station_fishnet_index.size()},
                    {"observations", world.stations.size()},
                    {"both", both},
                    {"max_only", max_only},
                    {"min_only", min_only},
                    {"gldas_cells", world.cells.size()},
                    {"dem_cells", world.inputs.dem.size()}});
}

void cmd_features(const Manifest& m) {
  StageTimer timer("features");
  const WorkPaths wp{m.work_dir()};
  terrain::TerrainInputs in;
  in.dem = read_ascii_grid(m.path("dem"));
  in.nir = read_ascii_grid(m.path("nir"));
  in.red = read_ascii_grid(m.path("red"));
  in.swir = read_ascii_grid(m.path("swir"));
  in.sy = read_ascii_grid(m.path("sy"));
  in.clay_thickness = read_ascii_grid(m.path("clay"));
  in.lithology = read_ascii_grid(m.path("lithology"));
  const auto wells = load_wells(m);

  const auto rasters = terrain::derive_features(in, m.terrain());
  for (const auto& [name, r] : rasters) write_ascii_grid(r, wp.feature(name));

  HgfTable fishnet;
  fishnet.points = terrain::make_fishnet(m.extent(), m.fishnet_cell_m());
  fishnet.hgf = terrain::sample_hgf(rasters, fishnet.points);
  const int width = static_cast<int>(std::to_string(fishnet.points.size()).size());
  for (std::size_t i = 0; i < fishnet.points.size(); ++i) {
    auto n = std::to_string(i + 1);
    fishnet.ids.push_back("P" + std::string(static_cast<std::size_t>(width) - n.size(), '0') + n);
  }
  write_hgf_csv(fishnet, wp.fishnet_hgf());

  // One location per station, checked for consistency across years.
  std::map<std::string, GeoPoint> located;
  for (const auto& o : wells.observations) {
    auto [it, inserted] = located.emplace(o.station_id, o.location);
    if (!inserted && !(it->second == o.location)) {
      throw DataError("station '" + o.station_id + "' is reported at two different locations");
    }
  }
  HgfTable stations;
  for (const auto& [id, p] : located) {
    stations.ids.push_back(id);
    stations.points.push_back(p);
  }
  stations.hgf = terrain::sample_hgf(rasters, stations.points);
  write_hgf_csv(stations, wp.station_hgf());

  summary("features", {{"rasters", rasters.size()},
                       {"hgf_columns", kHgfCount},
                       {"fishnet_points", fishnet.points.size()},
                       {"stations", stations.ids.size()},
                       {"observations", wells.observations.size()},
                       {"rejected_rows", wells.summary.rejected}});
}

void cmd_pseudo_gt(const Manifest& m) {
  StageTimer timer("pseudo-gt");
  const WorkPaths wp{m.work_dir()};
  const auto years = m.years();
  const auto fishnet = load_fishnet(wp);
  const auto stations = load_stations(m, wp);
  const auto schema = task1_schema(fishnet, stations);
  const auto opts = m.train_options();

  const auto max_rows = pipeline::assemble_max_rows(stations);
  const auto max_model = pipeline::train_max_model(max_rows, schema, opts);
  const auto min_rows = pipeline::assemble_min_rows(stations, &max_model);
  const auto min_model = pipeline::train_min_model(min_rows, schema, opts);
  for (const auto& w : max_model.report.warnings) log(LogLevel::warn, w, {{"model", "max"}});
  for (const auto& w : min_model.report.warnings) log(LogLevel::warn, w, {{"model", "min"}});

  const auto pgt = pipeline::generate_pseudo_gt(max_model, min_model, fishnet, years, stations, m.pgt_options());

  write_text_file(wp.max_model(), max_model.to_json());
  write_text_file(wp.min_model(), min_model.to_json());
  write_pgt_csv(pgt, wp.pseudo_gt());

  ojson pj{{"points", pgt.points.size()},
           {"n_predicted", pgt.n_predicted},
           {"n_in_situ", pgt.n_in_situ},
           {"dropped", pgt.dropped},
           {"filled", pgt.filled},
           {"predicted_violations", pgt.predicted_violations},
           {"predicted_violation_rate", pgt.predicted_violation_rate},
           {"clamped", pgt.clamped}};
  ojson report{{"max_model", model_report_json(max_model)},
               {"min_model", model_report_json(min_model)},
               {"pseudo_gt", pj}};
  write_json(wp.report("task1"), report);

  summary("pseudo-gt", {{"max_r2", max_model.report.test ? ojson(max_model.report.test->r2) : ojson(nullptr)},
                        {"min_r2", min_model.report.test ? ojson(min_model.report.test->r2) : ojson(nullptr)},
                        {"max_rows", max_rows.size()},
                        {"min_rows", min_rows.size()},
                        {"points", pgt.points.size()},
                        {"dropped", pgt.dropped},
                        {"violation_rate", pgt.predicted_violation_rate}});
}

void cmd_train_upsampler(const Manifest& m) {
  StageTimer timer("train-upsampler");
  const WorkPaths wp{m.work_dir()};
  const auto cells = read_gldas_csv(m.path("gldas"));
  const auto fishnet = load_fishnet(wp);
  const auto pgt = read_pgt_csv(require_artifact(wp.pseudo_gt(), "pseudo-gt"));

  const auto centroids = pipeline::cell_centroids(cells);
  const auto fishnet_serials = pipeline::map_to_serials(fishnet.points, centroids);
  const auto rep = pipeline::representative_hgfs(fishnet.hgf, fishnet_serials, m.rep_stat());
  HgfTable rep_table;
  for (const auto& [serial, h] : rep) {
    rep_table.ids.push_back(std::to_string(serial));
    rep_table.points.push_back(centroids.at(serial));
    rep_table.hgf.push_back(h);
  }
  write_hgf_csv(rep_table, wp.rep_hgf());

  const auto rows = upsample_rows(cells, pgt, rep);
  const auto schema = task2_schema(fishnet, pgt);
  const auto model = pipeline::train_upsampler(rows, schema, m.upsampler_options());
  for (const auto& w : model.report.warnings) log(LogLevel::warn, w, {{"model", "upsampler"}});
  write_text_file(wp.upsampler(), model.to_json());

  ojson report{{"test_max", metrics_json(model.report.test_max)},
               {"test_min", metrics_json(model.report.test_min)},
               {"rows", rows.size()},
               {"n_train", model.report.n_train},
               {"n_test", model.report.n_test},
               {"n_cells", model.report.n_cells},
               {"warnings", model.report.warnings},
               {"importances_max", ranked_importances(model.max_forest)},
               {"importances_min", ranked_importances(model.min_forest)}};
  write_json(wp.report("task2"), report);
  summary("train-upsampler",
          {{"rows", rows.size()},
           {"cells", model.report.n_cells},
           {"max_r2", model.report.test_max ? ojson(model.report.test_max->r2) : ojson(nullptr)},
           {"min_r2", model.report.test_min ? ojson(model.report.test_min->r2) : ojson(nullptr)}});
}

void cmd_downscale(const Manifest& m, std::optional<int> year) {
  StageTimer timer("downscale");
  const WorkPaths wp{m.work_dir()};
  const auto model = pipeline::Upsampler::from_json(read_text_file(require_artifact(wp.upsampler(), "train-upsampler")));
  const auto cells = read_gldas_csv(m.path("gldas"));
  const auto fishnet = load_fishnet(wp);
  const auto rep = load_rep_hgf(wp);
  const auto serials = pipeline::map_to_serials(fishnet.points, pipeline::cell_centroids(cells));

  const auto years = year ? std::vector<int>{*year} : m.years();
  for (int y : years) {
    const auto points = pipeline::downscale_year(model, cells, y, fishnet, serials, rep);
    write_downscale_csv(points, wp.downscaled_csv(y));
    std::vector<PointFeature> features;
    features.reserve(points.size());
    std::size_t violations = 0;
    for (const auto& p : points) {
      if (p.min_gwl > p.max_gwl) ++violations;
      features.push_back({p.location,
                          {{"point_id", p.id},
                           {"serial_id", static_cast<std::int64_t>(p.serial_id)},
                           {"max_gwl_m", p.max_gwl},
                           {"min_gwl_m", p.min_gwl}}});
    }
    write_geojson(features, wp.downscaled_geojson(y));
    summary("downscale", {{"year", y},
                          {"points", points.size()},
                          {"violations", violations},
                          {"violation_rate", points.empty() ? 0.0 : double(violations) / double(points.size())}});
  }
}

void cmd_recharge(const Manifest& m) {
  StageTimer timer("recharge");
  const WorkPaths wp{m.work_dir()};
  const auto fishnet = load_fishnet(wp);
  std::map<std::string, double> sy;
  for (std::size_t i = 0; i < fishnet.ids.size(); ++i) sy[fishnet.ids[i]] = fishnet.hgf[i][Hgf::sy];

  const auto years = m.years();
  std::vector<RechargeRow> rows;
  std::map<int, std::map<std::string, double>> by_year_recharge, by_year_max;
  std::size_t negative = 0;
  for (int y : years) {
    const auto points = read_downscale_csv(require_artifact(wp.downscaled_csv(y), "downscale"));
    for (const auto& p : points) {
      auto it = sy.find(p.id);
      if (it == sy.end()) throw JoinError("downscaled point '" + p.id + "' is not in the fishnet table");
      RechargeRow r{p.id, p.location, y, p.max_gwl, p.min_gwl, it->second,
                    analysis::recharge_cm(p.max_gwl, p.min_gwl, it->second)};
      if (r.recharge_cm < 0.0) ++negative;
      by_year_recharge[y][p.id] = r.recharge_cm;
      by_year_max[y][p.id] = p.max_gwl;
      rows.push_back(std::move(r));
    }
  }
  write_recharge_csv(rows, wp.recharge());
  if (negative) log(LogLevel::warn, "negative recharge where min exceeds max", {{"count", negative}});

  auto change_json = [](const analysis::ChangeSummary& s) {
    return ojson{{"n", s.n},     {"mean", s.mean},   {"std", s.std},
                 {"max", s.max}, {"min", s.min},     {"edges", s.edges},
                 {"bin_percent", s.bin_percent}};
  };
  ojson report{{"rows", rows.size()}, {"negative", negative}};
  if (years.size() >= 2) {
    const int a = years.front(), b = years.back();
    const std::array<double, 4> gwl_edges{-1.0, -0.5, 0.5, 1.0};
    const std::array<double, 4> rch_edges{-10.0, -5.0, 5.0, 10.0};
    report["change"] = {
        {"from", a},
        {"to", b},
        {"max_gwl_m", change_json(analysis::summarize_change(by_year_max[a], by_year_max[b], gwl_edges))},
        {"recharge_cm", change_json(analysis::summarize_change(by_year_recharge[a], by_year_recharge[b], rch_edges))}};
  }
  write_json(wp.report("recharge"), report);
  double mean = 0.0;
  for (const auto& r : rows) mean += r.recharge_cm;
  summary("recharge", {{"rows", rows.size()},
                       {"years", years.size()},
                       {"mean_recharge_cm", rows.empty() ? 0.0 : mean / double(rows.size())},
                       {"negative", negative}});
}

void cmd_trends(const Manifest& m) {
  StageTimer timer("trends");
  const WorkPaths wp{m.work_dir()};
  const auto rows = read_recharge_csv(require_artifact(wp.recharge(), "recharge"));

  // Series keyed by point id, in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, analysis::PointSeries> series;
  for (const auto& r : rows) {
    auto [it, inserted] = series.try_emplace(r.id);
    if (inserted) {
      order.push_back(r.id);
      it->second.location = r.location;
    }
    it->second.years.push_back(r.year);
    it->second.values.push_back(r.recharge_cm);
  }

  std::string csv = "lat,lon,sen_slope,z,p,category\n";
  std::vector<PointFeature> features;
  std::map<std::string, std::size_t> counts;
  for (auto c = 0; c < 6; ++c) counts[std::string(analysis::category_name(static_cast<analysis::RechargeCategory>(c)))] = 0;
  std::size_t clamped = 0, significant = 0;
  for (const auto& id : order) {
    auto& s = series.at(id);
    // Years in the file follow manifest order, but sort defensively.
    std::vector<std::size_t> idx(s.years.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.years[a] < s.years[b]; });
    analysis::PointSeries sorted{s.location, {}, {}};
    for (auto i : idx) {
      sorted.years.push_back(s.years[i]);
      sorted.values.push_back(s.values[i]);
    }
    const auto t = analysis::trend(sorted);
    const auto cat = analysis::categorize_recharge_slope(*t.sen_slope);
    const auto name = std::string(analysis::category_name(cat.category));
    ++counts[name];
    if (cat.clamped) ++clamped;
    if (t.p < 0.05) ++significant;
    csv += format_double(s.location.lat) + ',' + format_double(s.location.lon) + ',' + format_double(*t.sen_slope) + ',' +
           format_double(t.z) + ',' + format_double(t.p) + ',' + name + '\n';
    features.push_back({s.location,
                        {{"point_id", id},
                         {"sen_slope", *t.sen_slope},
                         {"s", static_cast<std::int64_t>(t.s)},
                         {"z", t.z},
                         {"p", t.p},
                         {"category", name},
                         {"clamped", static_cast<std::int64_t>(cat.clamped)}}});
  }
  write_text_file(wp.trends_csv(), csv);
  write_geojson(features, wp.trends_geojson());
  ojson cj;
  for (const auto& [k, v] : counts) cj[k] = v;
  summary("trends", {{"points", order.size()}, {"significant_p05", significant}, {"clamped", clamped}, {"categories", cj}});
}

// ---------------------------------------------------------------------------
// eval

namespace {

struct TruthKey {
  int year;
  double lat, lon;
  auto operator<=>(const TruthKey&) const = default;
};

std::map<TruthKey, std::pair<double, double>> read_truth(const fs::path& path) {
  std::map<TruthKey, std::pair<double, double>> out;
  const auto text = read_text_file(path);
  std::size_t pos = text.find('\n');
  std::size_t line = 1;
  while (pos != std::string::npos && pos + 1 < text.size()) {
    const auto end = text.find('\n', pos + 1);
    const auto row = std::string_view(text).substr(pos + 1, (end == std::string::npos ? text.size() : end) - pos - 1);
    pos = end;
    ++line;
    if (row.empty()) continue;
    const auto f = split_csv_line(row);
    if (f.size() != 5) throw FormatError(path.string() + ": expected 5 fields", line);
    auto lat = parse_double(f[0]), lon = parse_double(f[1]), mx = parse_double(f[3]), mn = parse_double(f[4]);
    auto y = parse_int(f[2]);
    if (!lat || !lon || !mx || !mn || !y) throw FormatError(path.string() + ": bad number", line);
    out[{static_cast<int>(*y), *lat, *lon}] = {*mx, *mn};
  }
  return out;
}

std::vector<eval::FieldEstimate> model_field(const pipeline::GwlModel& mx, const pipeline::GwlModel& mn,
                                             std::span<const GeoPoint> points, std::span<const HgfVector> hgf,
                                             int year) {
  std::vector<eval::FieldEstimate> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double a = mx.predict(hgf[i], year);
    out.push_back({points[i], year, a, mn.predict(hgf[i], year, a)});
  }
  return out;
}

ojson loyo_json(const eval::LoyoResult& r) {
  ojson folds = ojson::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"year", f.year}, {"r2", f.metrics.r2}, {"mse", f.metrics.mse}, {"n_test", f.metrics.n},
                     {"n_train", f.n_train}});
  }
  return {{"folds", folds}, {"mean_r2", r.mean_r2}, {"mean_mse", r.mean_mse}};
}

eval::LoyoResult loyo_gwl(std::span<const pipeline::TrainingRow> rows, const pipeline::FeatureSchema& schema,
                          pipeline::TrainOptions opts) {
  opts.test_fraction = 0.0;
  std::vector<int> years;
  for (const auto& r : rows) years.push_back(r.year);
  auto train = [&](const std::vector<std::size_t>& idx) {
    std::vector<pipeline::TrainingRow> sub;
    for (auto i : idx) sub.push_back(rows[i]);
    return pipeline::train_max_model(sub, schema, opts);
  };
  auto score = [&](const pipeline::GwlModel& model, const std::vector<std::size_t>& idx) {
    std::vector<double> yt, yp;
    for (auto i : idx) {
      yt.push_back(rows[i].target);
      yp.push_back(model.predict(rows[i].hgf, rows[i].year));
    }
    return eval::evaluate(yt, yp);
  };
  return eval::loyo_cv(years, train, score);
}

}  // namespace

void cmd_eval(const Manifest& m) {
  StageTimer timer("eval");
  const WorkPaths wp{m.work_dir()};
  const auto years = m.years();
  const auto fishnet = load_fishnet(wp);
  const auto stations = load_stations(m, wp);
  const auto schema = task1_schema(fishnet, stations);
  const auto max_model =
      pipeline::GwlModel::from_json(read_text_file(require_artifact(wp.max_model(), "pseudo-gt")));
  const auto min_model =
      pipeline::GwlModel::from_json(read_text_file(require_artifact(wp.min_model(), "pseudo-gt")));
  const auto upsampler =
      pipeline::Upsampler::from_json(read_text_file(require_artifact(wp.upsampler(), "train-upsampler")));
  const auto cells = read_gldas_csv(m.path("gldas"));
  const auto pgt = read_pgt_csv(require_artifact(wp.pseudo_gt(), "pseudo-gt"));
  const auto rep = load_rep_hgf(wp);
  auto opts = m.train_options();

  ojson report;
  report["task1"] = {{"max_model", model_report_json(max_model)}, {"min_model", model_report_json(min_model)}};
  report["task2"] = {{"test_max", metrics_json(upsampler.report.test_max)},
                     {"test_min", metrics_json(upsampler.report.test_min)},
                     {"n_train", upsampler.report.n_train},
                     {"n_test", upsampler.report.n_test}};

  // Conditioning ablation: fishnet-wide min > max rates.
  {
    const auto uncond = pipeline::train_unconditioned_min_model(
        pipeline::assemble_min_rows_unconditioned(stations), schema, opts);
    std::size_t n = 0, v_cond = 0, v_uncond = 0;
    for (int y : years) {
      for (const auto& h : fishnet.hgf) {
        const double a = max_model.predict(h, y);
        if (min_model.predict(h, y, a) > a) ++v_cond;
        if (uncond.predict(h, y) > a) ++v_uncond;
        ++n;
      }
    }
    const double rc = double(v_cond) / double(n), ru = double(v_uncond) / double(n);
    report["conditioning"] = {{"points", n},
                              {"conditioned_violation_rate", rc},
                              {"unconditioned_violation_rate", ru},
                              {"unconditioned_test", metrics_json(uncond.report.test)}};
    summary("eval.conditioning", {{"conditioned", rc}, {"unconditioned", ru}});
  }

  // IDW baseline against held-out stations.
  {
    std::vector<eval::SplitKey> keys;
    for (const auto& o : stations.observations) keys.push_back({o.station_id, o.year});
    const auto plan = eval::per_year_split(keys, m.real("eval.holdout_fraction", 0.2), opts.split_seed + 1);
    StationData train = stations;
    train.observations.clear();
    std::vector<WellObservation> holdout;
    for (auto i : plan.train_indices()) train.observations.push_back(stations.observations[i]);
    for (auto i : plan.test_indices()) holdout.push_back(stations.observations[i]);
    auto bopts = opts;
    bopts.test_fraction = 0.0;
    const auto bmax = pipeline::train_max_model(pipeline::assemble_max_rows(train), schema, bopts);
    const auto bmin = pipeline::train_min_model(pipeline::assemble_min_rows(train, &bmax), schema, bopts);

    eval::IdwOptions iopt;
    iopt.power = m.real("idw.power", 2.0);
    if (m.has("idw.k")) iopt.k = static_cast<std::size_t>(m.integer("idw.k", 0));
    std::vector<eval::FieldEstimate> mfield, ifield;
    for (int y : years) {
      std::vector<GeoPoint> pts = fishnet.points;
      std::vector<HgfVector> hgf = fishnet.hgf;
      for (const auto& o : holdout) {
        if (o.year != y) continue;
        pts.push_back(o.location);
        hgf.push_back(stations.hgf.at(o.station_id));
      }
      const auto mf = model_field(bmax, bmin, pts, hgf, y);
      mfield.insert(mfield.end(), mf.begin(), mf.end());
      std::vector<eval::IdwSample> smax, smin;
      for (const auto& o : train.observations) {
        if (o.year != y) continue;
        if (o.max_gwl) smax.push_back({o.location, *o.max_gwl});
        if (o.min_gwl) smin.push_back({o.location, *o.min_gwl});
      }
      if (smax.empty() || smin.empty()) throw CoverageError("year " + std::to_string(y) + " has no IDW samples");
      for (const auto& p : pts) {
        ifield.push_back({p, y, eval::idw_interpolate(smax, p, iopt), eval::idw_interpolate(smin, p, iopt)});
      }
    }
    const auto b = eval::compare_baseline(mfield, ifield, holdout);
    report["baseline"] = {{"holdout", holdout.size()},
                          {"idw_power", iopt.power},
                          {"model_max", metrics_json(b.model_max)},
                          {"model_min", metrics_json(b.model_min)},
                          {"idw_max", metrics_json(b.idw_max)},
                          {"idw_min", metrics_json(b.idw_min)},
                          {"model_violation_rate", b.model_violation_rate},
                          {"idw_violation_rate", b.idw_violation_rate}};
    summary("eval.baseline", {{"model_max_r2", b.model_max.r2},
                              {"idw_max_r2", b.idw_max.r2},
                              {"model_min_r2", b.model_min.r2},
                              {"idw_min_r2", b.idw_min.r2},
                              {"model_violation_rate", b.model_violation_rate},
                              {"idw_violation_rate", b.idw_violation_rate}});
  }

  // Year-feature ablation on the max model.
  {
    const auto rows = pipeline::assemble_max_rows(stations);
    auto with_year = loyo_gwl(rows, schema, opts);
    auto no_year_opts = opts;
    no_year_opts.use_year = false;
    auto without = loyo_gwl(rows, schema, no_year_opts);
    report["year_ablation"] = {{"with_year", loyo_json(with_year)}, {"without_year", loyo_json(without)}};
    summary("eval.year_ablation", {{"with_year_r2", with_year.mean_r2}, {"without_year_r2", without.mean_r2}});
  }

  // Upsampler LOYO.
  const auto rows = upsample_rows(cells, pgt, rep);
  if (m.flag("eval.loyo", true)) {
    const auto loyo = pipeline::loyo_upsampler(rows, task2_schema(fishnet, pgt), m.upsampler_options());
    report["loyo"] = loyo_json(loyo);
    for (const auto& f : loyo.folds) {
      summary("eval.loyo", {{"year", f.year}, {"r2", f.metrics.r2}, {"mse", f.metrics.mse}, {"n", f.metrics.n}});
    }
    summary("eval.loyo_mean", {{"folds", loyo.folds.size()}, {"mean_r2", loyo.mean_r2}, {"mean_mse", loyo.mean_mse}});
  }

  // Interpretation: PD of the upsampler's max output against max_gws.
  {
    forest::Matrix background;
    const auto want = static_cast<std::size_t>(std::max<long long>(1, m.integer("eval.pd_background", 500)));
    const std::size_t stride = std::max<std::size_t>(1, rows.size() / want);
    std::vector<double> gws;
    for (std::size_t i = 0; i < rows.size(); i += stride) {
      background.append_row(upsample_features(upsampler.schema, rows[i], upsampler.uses_year));
    }
    for (const auto& r : rows) gws.push_back(r.max_gws);
    std::sort(gws.begin(), gws.end());
    std::vector<double> grid;
    for (int q = 0; q <= 10; ++q) grid.push_back(gws[static_cast<std::size_t>(q * (gws.size() - 1) / 10)]);
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto names = upsampler.feature_names();
    const auto f = static_cast<std::size_t>(std::find(names.begin(), names.end(), "max_gws") - names.begin());
    const auto pd = forest::partial_dependence(upsampler.max_forest, f, grid, background);
    bool decreasing = true;
    for (std::size_t i = 1; i < pd.size(); ++i) decreasing = decreasing && pd[i] <= pd[i - 1];
    const auto top = ranked_importances(max_model.forest);
    report["interpretation"] = {{"max_model_top_feature", top.empty() ? ojson(nullptr) : top[0]["feature"]},
                                {"upsampler_max_importances", ranked_importances(upsampler.max_forest)},
                                {"pd_max_gws", {{"grid", grid}, {"pd", pd}, {"monotone_decreasing", decreasing}}}};
    summary("eval.interpretation",
            {{"top_feature", report["interpretation"]["max_model_top_feature"]}, {"pd_decreasing", decreasing}});
  }

  // Downscaled fields against generative truth, when both are on disk.
  if (auto tp = m.opt_path("truth"); tp && fs::exists(*tp)) {
    const auto truth = read_truth(*tp);
    ojson per_year = ojson::array();
    for (int y : years) {
      if (!fs::exists(wp.downscaled_csv(y))) continue;
      std::vector<double> tmax, pmax, tmin, pmin;
      for (const auto& p : read_downscale_csv(wp.downscaled_csv(y))) {
        auto it = truth.find({y, p.location.lat, p.location.lon});
        if (it == truth.end()) continue;
        tmax.push_back(it->second.first);
        pmax.push_back(p.max_gwl);
        tmin.push_back(it->second.second);
        pmin.push_back(p.min_gwl);
      }
      if (tmax.size() < 2) continue;
      per_year.push_back(
          {{"year", y}, {"max", metrics_json(eval::evaluate(tmax, pmax))}, {"min", metrics_json(eval::evaluate(tmin, pmin))}});
    }
    report["truth"] = per_year;
  }

  write_json(wp.report("eval"), report);
}

}  // namespace aqd::cli
