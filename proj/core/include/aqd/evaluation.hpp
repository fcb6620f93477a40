#pragma once

// Regression metrics, per-year train/test splits, leave-one-year-out
// cross-validation and the inverse-distance-weighting baseline.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aqd/errors.hpp"
#include "aqd/geodata.hpp"

namespace aqd::eval {

struct Metrics {
  double r2 = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

/// 1 - SS_res / SS_tot. Throws DataError on length mismatch, fewer than two
/// values, or zero-variance truth (R^2 is undefined there, not 0).
double r2_score(std::span<const double> y_true, std::span<const double> y_pred);
double mse(std::span<const double> y_true, std::span<const double> y_pred);
Metrics evaluate(std::span<const double> y_true, std::span<const double> y_pred);

/// Stable identity of a row for splitting; the plan depends on keys, not on row order.
struct SplitKey {
  std::string id;
  int year = 0;
};

struct YearSplit {
  int year = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  std::uint64_t seed = 0;
  double fraction = 0.2;
  std::vector<YearSplit> years;  // ascending year
  std::vector<std::string> warnings;

  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> test_indices() const;
};

/// Within each year, round(fraction * n_year) rows go to test. Years with
/// fewer than two rows stay wholly in train and produce a warning.
SplitPlan per_year_split(std::span<const SplitKey> rows, double fraction, std::uint64_t seed);

struct FoldResult {
  int year = 0;
  Metrics metrics;
  std::size_t n_train = 0;
};

struct LoyoResult {
  std::vector<FoldResult> folds;  // ascending year
  double mean_r2 = 0.0;
  double mean_mse = 0.0;
};

/// Leave-one-year-out: for every distinct year y, `train(train_idx)` builds a
/// model on rows with year != y and `evaluate(model, test_idx)` scores it on
/// year y. Requires at least three distinct years.
template <class TrainFn, class EvalFn>
LoyoResult loyo_cv(std::span<const int> row_years, TrainFn&& train, EvalFn&& evaluate) {
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < row_years.size(); ++i) by_year[row_years[i]].push_back(i);
  if (by_year.size() < 3) throw CoverageError("LOYO needs at least 3 distinct years");
  LoyoResult out;
  for (const auto& [year, test] : by_year) {
    std::vector<std::size_t> train_idx;
    train_idx.reserve(row_years.size() - test.size());
    for (std::size_t i = 0; i < row_years.size(); ++i) {
      if (row_years[i] != year) train_idx.push_back(i);
    }
    auto model = train(std::as_const(train_idx));
    FoldResult fold;
    fold.year = year;
    fold.n_train = train_idx.size();
    fold.metrics = evaluate(std::as_const(model), std::as_const(test));
    out.folds.push_back(fold);
  }
  for (const auto& f : out.folds) {
    out.mean_r2 += f.metrics.r2;
    out.mean_mse += f.metrics.mse;
  }
  out.mean_r2 /= static_cast<double>(out.folds.size());
  out.mean_mse /= static_cast<double>(out.folds.size());
  return out;
}

struct IdwSample {
  GeoPoint point;
  double value = 0.0;
};

struct IdwOptions {
  double power = 2.0;
  std::optional<std::size_t> k;  // nearest k samples; nullopt = all
};

/// Sum w_i v_i / sum w_i with w_i = d_i^-power (haversine meters). A query
/// within 1 m of a sample returns that sample's value.
double idw_interpolate(std::span<const IdwSample> samples, const GeoPoint& query, const IdwOptions& opts = {});

struct FieldEstimate {
  GeoPoint point;
  int year = 0;
  double max_gwl = 0.0;
  double min_gwl = 0.0;
};

/// Fraction of estimates with min_gwl > max_gwl.
double violation_rate(std::span<const FieldEstimate> field);

struct BaselineReport {
  Metrics model_max;
  Metrics model_min;
  Metrics idw_max;
  Metrics idw_min;
  double model_violation_rate = 0.0;
  double idw_violation_rate = 0.0;
};

/// Scores both fields against held-out observations. Each holdout
/// observation needs an estimate of the same year within 1 m in both fields.
/// Violation rates are taken over the whole of each field.
BaselineReport compare_baseline(std::span<const FieldEstimate> model_field, std::span<const FieldEstimate> idw_field,
                                std::span<const WellObservation> holdout);

}  // namespace aqd::eval
