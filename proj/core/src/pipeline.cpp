#include "aqd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "aqd/errors.hpp"
#include "aqd/random.hpp"
#include "forest_json.hpp"
#include "json.hpp"

namespace aqd::pipeline {

using ojson = nlohmann::ordered_json;

FeatureSchema::FeatureSchema(std::vector<int> lithology_codes) : codes_(std::move(lithology_codes)) {
  std::sort(codes_.begin(), codes_.end());
  codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
}

FeatureSchema FeatureSchema::from_hgfs(std::initializer_list<std::span<const HgfVector>> sets) {
  std::vector<int> codes;
  for (const auto& set : sets) {
    for (const auto& h : set) codes.push_back(h.lithology_code());
  }
  return FeatureSchema(std::move(codes));
}

std::vector<std::string> FeatureSchema::names(std::string_view prefix) const {
  std::vector<std::string> out;
  out.reserve(width());
  for (std::size_t k = 0; k < kHgfCount; ++k) {
    if (static_cast<Hgf>(k) == Hgf::lithology) {
      for (int c : codes_) out.push_back(std::string(prefix) + "lithology_" + std::to_string(c));
    } else {
      out.push_back(std::string(prefix) + std::string(kHgfNames[k]));
    }
  }
  return out;
}

void FeatureSchema::append(const HgfVector& hgf, std::vector<double>& out) const {
  for (std::size_t k = 0; k < kHgfCount; ++k) {
    if (static_cast<Hgf>(k) == Hgf::lithology) {
      const int code = hgf.lithology_code();
      if (!std::binary_search(codes_.begin(), codes_.end(), code)) {
        throw SchemaError("lithology code " + std::to_string(code) + " is not in the model schema");
      }
      for (int c : codes_) out.push_back(c == code ? 1.0 : 0.0);
    } else {
      out.push_back(hgf.values[k]);
    }
  }
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace {

ojson metrics_json(const std::optional<eval::Metrics>& m) {
  if (!m) return nullptr;
  return ojson{{"r2", m->r2}, {"mse", m->mse}, {"n", m->n}};
}

std::optional<eval::Metrics> metrics_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return eval::Metrics{j.at("r2").get<double>(), j.at("mse").get<double>(), j.at("n").get<std::size_t>()};
}

// Serializes `meta`, then appends the named forests as extra members.
std::string with_forests(const ojson& meta, std::initializer_list<std::pair<const char*, const forest::Forest*>> forests) {
  std::string out = meta.dump();
  out.pop_back();  // closing brace
  for (const auto& [name, f] : forests) {
    out += ",\"";
    out += name;
    out += "\":";
    forest::detail::append_forest_json(out, *f);
  }
  out += '}';
  return out;
}

nlohmann::json parse_document(std::string_view text, std::string_view format) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("model JSON does not parse: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_string()) {
    throw SchemaError("model document has no format field");
  }
  if (doc["format"].get<std::string>() != format) {
    throw SchemaError("unsupported model format '" + doc["format"].get<std::string>() + "', expected '" +
                      std::string(format) + "'");
  }
  return doc;
}

}  // namespace

// ---------------------------------------------------------------------------
// GWL models

std::vector<double> GwlModel::features(const HgfVector& hgf, int year, std::optional<double> cond) const {
  std::vector<double> x;
  x.reserve(schema.width() + 2);
  schema.append(hgf, x);
  if (uses_year) x.push_back(static_cast<double>(year));
  if (conditioned) {
    if (!cond) throw DataError("conditioned model needs a max_gwl_cond value");
    x.push_back(*cond);
  }
  return x;
}

double GwlModel::predict(const HgfVector& hgf, int year, std::optional<double> cond) const {
  return forest.predict_row(features(hgf, year, cond));
}

std::vector<std::string> GwlModel::feature_names() const {
  auto names = schema.names();
  if (uses_year) names.emplace_back("year");
  if (conditioned) names.emplace_back("max_gwl_cond");
  return names;
}

std::string GwlModel::to_json() const {
  ojson meta;
  meta["format"] = std::string(kGwlModelFormat);
  meta["lithology_codes"] = schema.lithology_codes();
  meta["conditioned"] = conditioned;
  meta["uses_year"] = uses_year;
  ojson rep;
  rep["test"] = metrics_json(report.test);
  rep["n_train"] = report.n_train;
  rep["n_test"] = report.n_test;
  rep["test_by_year"] = ojson::array();
  for (const auto& [year, m] : report.test_by_year) {
    auto j = metrics_json(m);
    j["year"] = year;
    rep["test_by_year"].push_back(j);
  }
  rep["warnings"] = report.warnings;
  meta["report"] = rep;
  return with_forests(meta, {{"forest", &forest}});
}

GwlModel GwlModel::from_json(std::string_view text) {
  const auto doc = parse_document(text, kGwlModelFormat);
  try {
    GwlModel m;
    m.schema = FeatureSchema(doc.at("lithology_codes").get<std::vector<int>>());
    m.conditioned = doc.at("conditioned").get<bool>();
    m.uses_year = doc.at("uses_year").get<bool>();
    const auto& rep = doc.at("report");
    m.report.test = metrics_from(rep.at("test"));
    m.report.n_train = rep.at("n_train").get<std::size_t>();
    m.report.n_test = rep.at("n_test").get<std::size_t>();
    for (const auto& j : rep.at("test_by_year")) m.report.test_by_year[j.at("year").get<int>()] = *metrics_from(j);
    m.report.warnings = rep.at("warnings").get<std::vector<std::string>>();
    m.forest = forest::detail::forest_from_json(doc.at("forest"));
    if (m.forest.n_features() != m.feature_names().size()) throw SchemaError("forest width does not match model schema");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model document: ") + e.what());
  }
}

namespace {

const HgfVector& station_hgf(const StationData& data, const std::string& id) {
  auto it = data.hgf.find(id);
  if (it == data.hgf.end()) throw JoinError("no HGF sample for station '" + id + "'");
  return it->second;
}

std::size_t distinct_years(std::span<const TrainingRow> rows) {
  std::set<int> ys;
  for (const auto& r : rows) ys.insert(r.year);
  return ys.size();
}

// Metrics over `idx`, or nullopt when R^2 is undefined there.
std::optional<eval::Metrics> try_metrics(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() < 2) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  if (*lo == *hi) return std::nullopt;
  return eval::evaluate(truth, pred);
}

GwlModel train_gwl(std::span<const TrainingRow> rows, const FeatureSchema& schema, const TrainOptions& opts,
                   bool conditioned) {
  if (distinct_years(rows) < 2) throw CoverageError("GWL model needs rows from at least 2 years");
  GwlModel model;
  model.schema = schema;
  model.conditioned = conditioned;
  model.uses_year = opts.use_year;
  for (const auto& r : rows) {
    if (conditioned && !r.max_gwl_cond) {
      throw DataError("row '" + r.key + "' (" + std::to_string(r.year) + ") has no max_gwl_cond");
    }
  }

  const auto plan = split_rows(rows, opts);
  model.report.warnings = plan.warnings;
  const auto train_idx = plan.train_indices();
  forest::Matrix X;
  std::vector<double> y;
  for (auto i : train_idx) {
    X.append_row(model.features(rows[i].hgf, rows[i].year, rows[i].max_gwl_cond));
    y.push_back(rows[i].target);
  }
  model.forest = forest::Forest::fit(X, y, opts.params, model.feature_names(), opts.threads);
  model.report.n_train = train_idx.size();

  std::vector<double> truth, pred;
  for (const auto& ys : plan.years) {
    std::vector<double> yt, yp;
    for (auto i : ys.test) {
      yt.push_back(rows[i].target);
      yp.push_back(model.predict(rows[i].hgf, rows[i].year, rows[i].max_gwl_cond));
    }
    if (auto m = try_metrics(yt, yp)) model.report.test_by_year[ys.year] = *m;
    truth.insert(truth.end(), yt.begin(), yt.end());
    pred.insert(pred.end(), yp.begin(), yp.end());
  }
  model.report.n_test = truth.size();
  model.report.test = try_metrics(truth, pred);
  if (!model.report.test) model.report.warnings.emplace_back("test split too small or constant; no test metrics");
  return model;
}

}  // namespace

std::vector<TrainingRow> assemble_max_rows(const StationData& data) {
  std::vector<TrainingRow> rows;
  for (const auto& o : data.observations) {
    if (!o.max_gwl) continue;
    rows.push_back({o.station_id, o.location, station_hgf(data, o.station_id), o.year, std::nullopt, *o.max_gwl});
  }
  return rows;
}

std::vector<TrainingRow> assemble_min_rows(const StationData& data, const GwlModel* max_model) {
  std::vector<TrainingRow> rows;
  for (const auto& o : data.observations) {
    if (!o.min_gwl) continue;
    const auto& hgf = station_hgf(data, o.station_id);
    std::optional<double> cond = o.max_gwl;
    if (!cond) {
      if (!max_model) {
        throw DataError("station '" + o.station_id + "' year " + std::to_string(o.year) +
                        " has no max level to condition on and no max model was given");
      }
      cond = max_model->predict(hgf, o.year);
    }
    rows.push_back({o.station_id, o.location, hgf, o.year, cond, *o.min_gwl});
  }
  return rows;
}

std::vector<TrainingRow> assemble_min_rows_unconditioned(const StationData& data) {
  std::vector<TrainingRow> rows;
  for (const auto& o : data.observations) {
    if (!o.min_gwl) continue;
    rows.push_back({o.station_id, o.location, station_hgf(data, o.station_id), o.year, std::nullopt, *o.min_gwl});
  }
  return rows;
}

eval::SplitPlan split_rows(std::span<const TrainingRow> rows, const TrainOptions& opts) {
  std::vector<eval::SplitKey> keys;
  keys.reserve(rows.size());
  for (const auto& r : rows) keys.push_back({r.key, r.year});
  return eval::per_year_split(keys, opts.test_fraction, opts.split_seed);
}

GwlModel train_max_model(std::span<const TrainingRow> rows, const FeatureSchema& schema, const TrainOptions& opts) {
  return train_gwl(rows, schema, opts, false);
}

GwlModel train_min_model(std::span<const TrainingRow> rows, const FeatureSchema& schema, const TrainOptions& opts) {
  return train_gwl(rows, schema, opts, true);
}

GwlModel train_unconditioned_min_model(std::span<const TrainingRow> rows, const FeatureSchema& schema,
                                       const TrainOptions& opts) {
  return train_gwl(rows, schema, opts, false);
}

std::string_view source_name(Source s) { return s == Source::in_situ ? "in_situ" : "predicted"; }

PseudoGroundTruth generate_pseudo_gt(const GwlModel& max_model, const GwlModel& min_model, const FishnetData& fishnet,
                                     std::span<const int> years, const StationData& stations,
                                     const PgtOptions& opts) {
  if (fishnet.points.size() != fishnet.hgf.size() || fishnet.ids.size() != fishnet.points.size()) {
    throw SchemaError("fishnet ids, points and HGFs differ in length");
  }
  PseudoGroundTruth out;
  const double lat_window = opts.dedup_radius_m / kMetersPerDegree;
  std::vector<int> sorted_years(years.begin(), years.end());
  std::sort(sorted_years.begin(), sorted_years.end());
  sorted_years.erase(std::unique(sorted_years.begin(), sorted_years.end()), sorted_years.end());

  for (int year : sorted_years) {
    std::vector<const WellObservation*> insitu;
    for (const auto& o : stations.observations) {
      if (o.year == year) insitu.push_back(&o);
    }
    std::vector<GeoPoint> by_lat;
    for (const auto* o : insitu) by_lat.push_back(o->location);
    std::sort(by_lat.begin(), by_lat.end(), [](const GeoPoint& a, const GeoPoint& b) { return a.lat < b.lat; });

    for (std::size_t i = 0; i < fishnet.points.size(); ++i) {
      const auto& p = fishnet.points[i];
      auto it = std::lower_bound(by_lat.begin(), by_lat.end(), p.lat - lat_window,
                                 [](const GeoPoint& g, double v) { return g.lat < v; });
      bool near = false;
      for (; it != by_lat.end() && it->lat <= p.lat + lat_window; ++it) {
        if (haversine_m(*it, p) <= opts.dedup_radius_m) {
          near = true;
          break;
        }
      }
      if (near) {
        ++out.dropped;
        continue;
      }
      PgtPoint pt;
      pt.id = fishnet.ids[i];
      pt.location = p;
      pt.year = year;
      pt.hgf = fishnet.hgf[i];
      pt.max_gwl = max_model.predict(pt.hgf, year);
      pt.min_gwl = min_model.predict(pt.hgf, year, pt.max_gwl);
      pt.source = Source::predicted;
      if (pt.min_gwl > pt.max_gwl) {
        ++out.predicted_violations;
        if (opts.clamp) {
          pt.min_gwl = pt.max_gwl;
          ++out.clamped;
        }
      }
      out.points.push_back(std::move(pt));
      ++out.n_predicted;
    }

    for (const auto* o : insitu) {
      PgtPoint pt;
      pt.id = o->station_id;
      pt.location = o->location;
      pt.year = year;
      pt.hgf = station_hgf(stations, o->station_id);
      pt.source = Source::in_situ;
      if (o->max_gwl) {
        pt.max_gwl = *o->max_gwl;
      } else {
        pt.max_gwl = max_model.predict(pt.hgf, year);
        ++out.filled;
      }
      if (o->min_gwl) {
        pt.min_gwl = *o->min_gwl;
      } else {
        pt.min_gwl = min_model.predict(pt.hgf, year, pt.max_gwl);
        ++out.filled;
      }
      out.points.push_back(std::move(pt));
      ++out.n_in_situ;
    }
  }
  out.predicted_violation_rate =
      out.n_predicted ? static_cast<double>(out.predicted_violations) / static_cast<double>(out.n_predicted) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Task 2

HgfVector representative_hgf(std::span<const HgfVector> cell_points, RepStat stat) {
  if (cell_points.empty()) throw DataError("representative HGF of an empty cell");
  HgfVector out;
  std::vector<double> v(cell_points.size());
  for (std::size_t k = 0; k < kHgfCount; ++k) {
    for (std::size_t i = 0; i < cell_points.size(); ++i) v[i] = cell_points[i].values[k];
    std::sort(v.begin(), v.end());
    // Lithology is categorical, so it always takes the mode.
    if (stat == RepStat::median && static_cast<Hgf>(k) != Hgf::lithology) {
      const std::size_t m = v.size() / 2;
      out.values[k] = v.size() % 2 ? v[m] : v[m - 1] + (v[m] - v[m - 1]) / 2.0;
      continue;
    }
    double best = v[0];
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < v.size();) {
      std::size_t j = i;
      while (j < v.size() && v[j] == v[i]) ++j;
      if (j - i > best_count) {  // strict: ties keep the smaller value
        best_count = j - i;
        best = v[i];
      }
      i = j;
    }
    out.values[k] = best;
  }
  return out;
}

std::map<int, GeoPoint> cell_centroids(std::span<const GldasCell> cells) {
  std::map<int, GeoPoint> out;
  for (const auto& c : cells) {
    auto [it, inserted] = out.emplace(c.serial_id, c.centroid);
    if (!inserted && !(it->second == c.centroid)) {
      throw SchemaError("serial " + std::to_string(c.serial_id) + " appears with two different centroids");
    }
  }
  return out;
}

std::vector<int> map_to_serials(std::span<const GeoPoint> points, const std::map<int, GeoPoint>& centroids) {
  std::vector<int> serials;
  std::vector<GeoPoint> cpts;
  for (const auto& [s, p] : centroids) {
    serials.push_back(s);
    cpts.push_back(p);
  }
  std::vector<int> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = serials[nearest_index(cpts, points[i])];
  return out;
}

std::map<int, HgfVector> representative_hgfs(std::span<const HgfVector> hgf, std::span<const int> serials,
                                             RepStat stat) {
  if (hgf.size() != serials.size()) throw SchemaError("HGF and serial lists differ in length");
  std::map<int, std::vector<HgfVector>> groups;
  for (std::size_t i = 0; i < hgf.size(); ++i) groups[serials[i]].push_back(hgf[i]);
  std::map<int, HgfVector> out;
  for (const auto& [s, pts] : groups) out.emplace(s, representative_hgf(pts, stat));
  return out;
}

std::vector<UpsampleRow> build_upsample_rows(std::span<const GldasCell> cells, const PseudoGroundTruth& pgt,
                                             std::span<const int> point_serials,
                                             const std::map<int, HgfVector>& rep_hgf) {
  if (point_serials.size() != pgt.points.size()) throw JoinError("serial mapping does not cover every point");
  std::map<std::pair<int, int>, const GldasCell*> index;
  for (const auto& c : cells) index.emplace(std::pair{c.serial_id, c.year}, &c);

  std::vector<UpsampleRow> rows;
  rows.reserve(pgt.points.size());
  std::vector<std::string> offenders;
  for (std::size_t i = 0; i < pgt.points.size(); ++i) {
    const auto& p = pgt.points[i];
    const int serial = point_serials[i];
    auto cell = index.find({serial, p.year});
    auto rep = rep_hgf.find(serial);
    if (cell == index.end() || rep == rep_hgf.end()) {
      offenders.push_back(p.id + "@" + std::to_string(p.year) + " (serial " + std::to_string(serial) +
                          (cell == index.end() ? ", no cell" : ", no representative HGF") + ")");
      continue;
    }
    UpsampleRow r;
    r.id = p.id;
    r.location = p.location;
    r.point_hgf = p.hgf;
    r.rep_hgf = rep->second;
    r.serial_id = serial;
    r.year = p.year;
    r.max_gws = cell->second->max_gws;
    r.min_gws = cell->second->min_gws;
    r.max_gwl = p.max_gwl;
    r.min_gwl = p.min_gwl;
    rows.push_back(std::move(r));
  }
  if (!offenders.empty()) {
    std::string msg = std::to_string(offenders.size()) + " point-years could not be joined to a cell: ";
    for (std::size_t k = 0; k < std::min<std::size_t>(offenders.size(), 5); ++k) msg += (k ? "; " : "") + offenders[k];
    if (offenders.size() > 5) msg += "; ...";
    throw JoinError(msg);
  }
  return rows;
}

std::vector<double> upsample_features(const FeatureSchema& schema, const UpsampleRow& row, bool use_year) {
  std::vector<double> x;
  x.reserve(2 * schema.width() + 3);
  schema.append(row.point_hgf, x);
  schema.append(row.rep_hgf, x);
  x.push_back(row.max_gws);
  x.push_back(row.min_gws);
  if (use_year) x.push_back(static_cast<double>(row.year));
  return x;
}

std::vector<double> Upsampler::features(const HgfVector& point, const HgfVector& rep, double max_gws, double min_gws,
                                        int year) const {
  UpsampleRow r;
  r.point_hgf = point;
  r.rep_hgf = rep;
  r.max_gws = max_gws;
  r.min_gws = min_gws;
  r.year = year;
  return upsample_features(schema, r, uses_year);
}

std::pair<double, double> Upsampler::predict(const HgfVector& point, const HgfVector& rep, double max_gws,
                                             double min_gws, int year) const {
  const auto x = features(point, rep, max_gws, min_gws, year);
  return {max_forest.predict_row(x), min_forest.predict_row(x)};
}

std::vector<std::string> Upsampler::feature_names() const {
  auto names = schema.names();
  auto rep = schema.names("rep_");
  names.insert(names.end(), rep.begin(), rep.end());
  names.emplace_back("max_gws");
  names.emplace_back("min_gws");
  if (uses_year) names.emplace_back("year");
  return names;
}

std::string Upsampler::to_json() const {
  ojson meta;
  meta["format"] = std::string(kUpsamplerFormat);
  meta["lithology_codes"] = schema.lithology_codes();
  meta["uses_year"] = uses_year;
  ojson rep;
  rep["test_max"] = metrics_json(report.test_max);
  rep["test_min"] = metrics_json(report.test_min);
  rep["n_train"] = report.n_train;
  rep["n_test"] = report.n_test;
  rep["n_cells"] = report.n_cells;
  rep["warnings"] = report.warnings;
  meta["report"] = rep;
  return with_forests(meta, {{"max_forest", &max_forest}, {"min_forest", &min_forest}});
}

Upsampler Upsampler::from_json(std::string_view text) {
  const auto doc = parse_document(text, kUpsamplerFormat);
  try {
    Upsampler m;
    m.schema = FeatureSchema(doc.at("lithology_codes").get<std::vector<int>>());
    m.uses_year = doc.at("uses_year").get<bool>();
    const auto& rep = doc.at("report");
    m.report.test_max = metrics_from(rep.at("test_max"));
    m.report.test_min = metrics_from(rep.at("test_min"));
    m.report.n_train = rep.at("n_train").get<std::size_t>();
    m.report.n_test = rep.at("n_test").get<std::size_t>();
    m.report.n_cells = rep.at("n_cells").get<std::size_t>();
    m.report.warnings = rep.at("warnings").get<std::vector<std::string>>();
    m.max_forest = forest::detail::forest_from_json(doc.at("max_forest"));
    m.min_forest = forest::detail::forest_from_json(doc.at("min_forest"));
    const auto width = m.feature_names().size();
    if (m.max_forest.n_features() != width || m.min_forest.n_features() != width) {
      throw SchemaError("forest width does not match upsampler schema");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed upsampler document: ") + e.what());
  }
}

namespace {

struct UpsampleMatrix {
  forest::Matrix X;
  std::vector<double> y_max;
  std::vector<double> y_min;
};

UpsampleMatrix gather(std::span<const UpsampleRow> rows, std::span<const std::size_t> idx, const FeatureSchema& schema,
                      bool use_year) {
  UpsampleMatrix m;
  for (auto i : idx) {
    m.X.append_row(upsample_features(schema, rows[i], use_year));
    m.y_max.push_back(rows[i].max_gwl);
    m.y_min.push_back(rows[i].min_gwl);
  }
  return m;
}

std::pair<forest::Forest, forest::Forest> fit_pair(const UpsampleMatrix& m, const std::vector<std::string>& names,
                                                   const UpsamplerOptions& opts) {
  auto fmax = forest::Forest::fit(m.X, m.y_max, opts.params, names, opts.threads);
  auto fmin = forest::Forest::fit(m.X, m.y_min, opts.params, names, opts.threads);
  return {std::move(fmax), std::move(fmin)};
}

}  // namespace

Upsampler train_upsampler(std::span<const UpsampleRow> rows, const FeatureSchema& schema,
                          const UpsamplerOptions& opts) {
  std::set<int> years, serials;
  for (const auto& r : rows) {
    years.insert(r.year);
    serials.insert(r.serial_id);
  }
  if (years.size() < 3) throw CoverageError("upsampler needs rows from at least 3 years");

  Upsampler model;
  model.schema = schema;
  model.uses_year = opts.use_year;
  model.report.n_cells = serials.size();
  if (serials.size() == 1) model.report.warnings.emplace_back("all rows fall in a single coarse cell");

  std::vector<eval::SplitKey> keys;
  for (const auto& r : rows) keys.push_back({r.id, r.year});
  const auto plan = eval::per_year_split(keys, opts.test_fraction, opts.split_seed);
  model.report.warnings.insert(model.report.warnings.end(), plan.warnings.begin(), plan.warnings.end());

  const auto train_idx = plan.train_indices();
  const auto test_idx = plan.test_indices();
  const auto names = model.feature_names();
  auto [fmax, fmin] = fit_pair(gather(rows, train_idx, schema, opts.use_year), names, opts);
  model.max_forest = std::move(fmax);
  model.min_forest = std::move(fmin);
  model.report.n_train = train_idx.size();
  model.report.n_test = test_idx.size();

  const auto test = gather(rows, test_idx, schema, opts.use_year);
  if (!test_idx.empty()) {
    model.report.test_max = try_metrics(test.y_max, model.max_forest.predict(test.X));
    model.report.test_min = try_metrics(test.y_min, model.min_forest.predict(test.X));
  }
  if (!model.report.test_max || !model.report.test_min) {
    model.report.warnings.emplace_back("test split too small or constant; no test metrics");
  }
  return model;
}

eval::LoyoResult loyo_upsampler(std::span<const UpsampleRow> rows, const FeatureSchema& schema,
                                const UpsamplerOptions& opts) {
  std::vector<int> years;
  years.reserve(rows.size());
  for (const auto& r : rows) years.push_back(r.year);
  std::vector<std::string> names;
  {
    Upsampler probe;
    probe.schema = schema;
    probe.uses_year = opts.use_year;
    names = probe.feature_names();
  }
  auto train = [&](const std::vector<std::size_t>& idx) { return fit_pair(gather(rows, idx, schema, opts.use_year), names, opts); };
  auto score = [&](const std::pair<forest::Forest, forest::Forest>& model, const std::vector<std::size_t>& idx) {
    const auto test = gather(rows, idx, schema, opts.use_year);
    const auto mx = eval::evaluate(test.y_max, model.first.predict(test.X));
    const auto mn = eval::evaluate(test.y_min, model.second.predict(test.X));
    return eval::Metrics{(mx.r2 + mn.r2) / 2.0, (mx.mse + mn.mse) / 2.0, mx.n};
  };
  return eval::loyo_cv(years, train, score);
}

std::vector<DownscalePoint> downscale_year(const Upsampler& model, std::span<const GldasCell> cells, int year,
                                           const FishnetData& fishnet, std::span<const int> serials,
                                           const std::map<int, HgfVector>& rep_hgf) {
  if (serials.size() != fishnet.points.size() || fishnet.hgf.size() != fishnet.points.size()) {
    throw SchemaError("fishnet points, HGFs and serials differ in length");
  }
  std::map<int, const GldasCell*> by_serial;
  for (const auto& c : cells) {
    if (c.year == year) by_serial.emplace(c.serial_id, &c);
  }
  if (by_serial.empty()) throw JoinError("no GLDAS cells for year " + std::to_string(year));

  std::vector<DownscalePoint> out;
  out.reserve(fishnet.points.size());
  std::set<int> missing;
  for (std::size_t i = 0; i < fishnet.points.size(); ++i) {
    auto cell = by_serial.find(serials[i]);
    auto rep = rep_hgf.find(serials[i]);
    if (cell == by_serial.end() || rep == rep_hgf.end()) {
      missing.insert(serials[i]);
      continue;
    }
    const auto [mx, mn] = model.predict(fishnet.hgf[i], rep->second, cell->second->max_gws, cell->second->min_gws, year);
    out.push_back({fishnet.ids.empty() ? std::to_string(i) : fishnet.ids[i], fishnet.points[i], serials[i], mx, mn});
  }
  if (!missing.empty()) {
    std::string msg = "year " + std::to_string(year) + " lacks cell or representative HGF for serials:";
    for (int s : missing) msg += " " + std::to_string(s);
    throw JoinError(msg);
  }
  return out;
}

}  // namespace aqd::pipeline
