#include "aqd/evaluation.hpp"

#include <cmath>
#include <numeric>
#include <tuple>

#include "aqd/random.hpp"

namespace aqd::eval {

namespace {
void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("metric inputs differ in length");
  if (a.size() < 2) throw DataError("metrics need at least two values");
}
}  // namespace

double mse(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred);
  double ss = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_true[i] - y_pred[i];
    ss += d * d;
  }
  return ss / static_cast<double>(y_true.size());
}

double r2_score(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred);
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double dt = y_true[i] - mean;
    const double dr = y_true[i] - y_pred[i];
    ss_tot += dt * dt;
    ss_res += dr * dr;
  }
  if (ss_tot == 0.0) throw DataError("R^2 undefined: truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

Metrics evaluate(std::span<const double> y_true, std::span<const double> y_pred) {
  return {r2_score(y_true, y_pred), mse(y_true, y_pred), y_true.size()};
}

std::vector<std::size_t> SplitPlan::train_indices() const {
  std::vector<std::size_t> out;
  for (const auto& y : years) out.insert(out.end(), y.train.begin(), y.train.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> SplitPlan::test_indices() const {
  std::vector<std::size_t> out;
  for (const auto& y : years) out.insert(out.end(), y.test.begin(), y.test.end());
  std::sort(out.begin(), out.end());
  return out;
}

SplitPlan per_year_split(std::span<const SplitKey> rows, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < rows.size(); ++i) by_year[rows[i].year].push_back(i);

  SplitPlan plan;
  plan.seed = seed;
  plan.fraction = fraction;
  for (auto& [year, idx] : by_year) {
    YearSplit ys;
    ys.year = year;
    if (idx.size() < 2) {
      plan.warnings.push_back("year " + std::to_string(year) + " has fewer than 2 rows; kept in train");
      ys.train = idx;
      plan.years.push_back(std::move(ys));
      continue;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rows[a].id < rows[b].id; });
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(year))));
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    ys.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    ys.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(ys.test.begin(), ys.test.end());
    std::sort(ys.train.begin(), ys.train.end());
    plan.years.push_back(std::move(ys));
  }
  return plan;
}

double idw_interpolate(std::span<const IdwSample> samples, const GeoPoint& query, const IdwOptions& opts) {
  if (samples.empty()) throw DataError("IDW needs at least one sample");
  if (!(opts.power > 0.0)) throw ConfigError("IDW power must be positive");
  std::vector<std::pair<double, std::size_t>> dist(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) dist[i] = {haversine_m(samples[i].point, query), i};
  std::size_t k = samples.size();
  if (opts.k) {
    if (*opts.k == 0) throw ConfigError("IDW k must be positive");
    k = std::min(k, *opts.k);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  }
  auto nearest = std::min_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k));
  if (nearest->first < 1.0) return samples[nearest->second].value;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double w = std::pow(dist[j].first, -opts.power);
    num += w * samples[dist[j].second].value;
    den += w;
  }
  return num / den;
}

double violation_rate(std::span<const FieldEstimate> field) {
  if (field.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& e : field) bad += e.min_gwl > e.max_gwl ? 1 : 0;
  return static_cast<double>(bad) / static_cast<double>(field.size());
}

namespace {
using FieldKey = std::tuple<int, double, double>;

std::map<FieldKey, std::size_t> index_field(std::span<const FieldEstimate> field) {
  std::map<FieldKey, std::size_t> out;
  for (std::size_t i = 0; i < field.size(); ++i) out.emplace(FieldKey{field[i].year, field[i].point.lat, field[i].point.lon}, i);
  return out;
}

const FieldEstimate& lookup(std::span<const FieldEstimate> field, const std::map<FieldKey, std::size_t>& exact,
                            const WellObservation& obs, const char* which) {
  const auto& p = obs.location;
  if (auto it = exact.find({obs.year, p.lat, p.lon}); it != exact.end()) return field[it->second];
  for (const auto& e : field) {
    if (e.year == obs.year && haversine_m(e.point, p) < 1.0) return e;
  }
  throw JoinError(std::string(which) + " field has no estimate at holdout point (" + format_double(p.lat) + ", " +
                  format_double(p.lon) + ") for year " + std::to_string(obs.year));
}
}  // namespace

BaselineReport compare_baseline(std::span<const FieldEstimate> model_field, std::span<const FieldEstimate> idw_field,
                                std::span<const WellObservation> holdout) {
  if (holdout.empty()) throw DataError("baseline comparison needs a nonempty holdout");
  const auto model_idx = index_field(model_field);
  const auto idw_idx = index_field(idw_field);

  std::vector<double> t_max, m_max, i_max, t_min, m_min, i_min;
  for (const auto& obs : holdout) {
    const auto& m = lookup(model_field, model_idx, obs, "model");
    const auto& w = lookup(idw_field, idw_idx, obs, "IDW");
    if (obs.max_gwl) {
      t_max.push_back(*obs.max_gwl);
      m_max.push_back(m.max_gwl);
      i_max.push_back(w.max_gwl);
    }
    if (obs.min_gwl) {
      t_min.push_back(*obs.min_gwl);
      m_min.push_back(m.min_gwl);
      i_min.push_back(w.min_gwl);
    }
  }
  BaselineReport rep;
  rep.model_max = evaluate(t_max, m_max);
  rep.idw_max = evaluate(t_max, i_max);
  rep.model_min = evaluate(t_min, m_min);
  rep.idw_min = evaluate(t_min, i_min);
  rep.model_violation_rate = violation_rate(model_field);
  rep.idw_violation_rate = violation_rate(idw_field);
  return rep;
}

}  // namespace aqd::eval
