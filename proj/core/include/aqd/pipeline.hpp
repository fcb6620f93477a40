#pragma once

// Two-phase water-level models, the pseudo-ground-truth field, and the
// coarse-to-fine upsampler joined on GLDAS serial ids.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aqd/evaluation.hpp"
#include "aqd/forest.hpp"
#include "aqd/geodata.hpp"

namespace aqd::pipeline {

/// Numeric layout of an HgfVector: the 17 factors in order, with lithology
/// replaced in place by a one-hot block over the known codes.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<int> lithology_codes);
  /// Codes seen across all of `sets`.
  static FeatureSchema from_hgfs(std::initializer_list<std::span<const HgfVector>> sets);

  const std::vector<int>& lithology_codes() const noexcept { return codes_; }
  std::size_t width() const noexcept { return kHgfCount - 1 + codes_.size(); }
  std::vector<std::string> names(std::string_view prefix = "") const;
  /// Throws SchemaError on a lithology code outside the schema.
  void append(const HgfVector& hgf, std::vector<double>& out) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<int> codes_;
};

// ---------------------------------------------------------------------------
// Task 1: max and min GWL models

struct TrainingRow {
  std::string key;  // station id; split keys must be unique within a year
  GeoPoint location;
  HgfVector hgf;
  int year = 0;
  std::optional<double> max_gwl_cond;  // phase-2 conditioning input
  double target = 0.0;
};

struct TrainOptions {
  forest::ForestParams params;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 42;
  bool use_year = true;
  std::size_t threads = 1;
};

struct ModelReport {
  std::optional<eval::Metrics> test;  // absent when the test split is degenerate
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::map<int, eval::Metrics> test_by_year;  // years whose test rows allow R^2
  std::vector<std::string> warnings;
};

struct GwlModel {
  forest::Forest forest;
  FeatureSchema schema;
  bool conditioned = false;
  bool uses_year = true;
  ModelReport report;

  std::vector<double> features(const HgfVector& hgf, int year, std::optional<double> cond = {}) const;
  double predict(const HgfVector& hgf, int year, std::optional<double> cond = {}) const;
  std::vector<std::string> feature_names() const;

  std::string to_json() const;
  static GwlModel from_json(std::string_view text);
};

inline constexpr std::string_view kGwlModelFormat = "aqd.gwlmodel/1";

/// Observations keyed by station with their sampled HGFs.
struct StationData {
  std::vector<WellObservation> observations;
  std::map<std::string, HgfVector> hgf;  // by station id
};

/// Rows with an in-situ max level.
std::vector<TrainingRow> assemble_max_rows(const StationData& data);
/// Rows with an in-situ min level. The conditioning value is the in-situ max
/// where reported, else `max_model`'s prediction; with no model and no max
/// the row cannot be assembled (DataError).
std::vector<TrainingRow> assemble_min_rows(const StationData& data, const GwlModel* max_model);
/// Same rows without conditioning, for the ablation.
std::vector<TrainingRow> assemble_min_rows_unconditioned(const StationData& data);

/// Row indices of the per-year test split the trainer uses for these rows.
eval::SplitPlan split_rows(std::span<const TrainingRow> rows, const TrainOptions& opts);

/// Trains on the per-year train split and scores on the test split.
/// Throws CoverageError with fewer than 2 distinct years.
GwlModel train_max_model(std::span<const TrainingRow> rows, const FeatureSchema& schema, const TrainOptions& opts);
/// Every row must carry max_gwl_cond (DataError otherwise).
GwlModel train_min_model(std::span<const TrainingRow> rows, const FeatureSchema& schema, const TrainOptions& opts);
/// Min model without the conditioning feature.
GwlModel train_unconditioned_min_model(std::span<const TrainingRow> rows, const FeatureSchema& schema,
                                       const TrainOptions& opts);

enum class Source { in_situ, predicted };
std::string_view source_name(Source s);

struct PgtPoint {
  std::string id;
  GeoPoint location;
  int year = 0;
  double max_gwl = 0.0;
  double min_gwl = 0.0;
  Source source = Source::predicted;
  HgfVector hgf;
};

struct PseudoGroundTruth {
  std::vector<PgtPoint> points;  // by year; predicted points then in-situ
  std::size_t n_predicted = 0;
  std::size_t n_in_situ = 0;
  std::size_t dropped = 0;  // fishnet point-years removed near a same-year station
  std::size_t filled = 0;   // in-situ levels completed by a model
  std::size_t predicted_violations = 0;
  double predicted_violation_rate = 0.0;  // min > max among predicted points, before any clamp
  std::size_t clamped = 0;
};

struct PgtOptions {
  double dedup_radius_m = 1850.0;
  bool clamp = false;  // set min := max where a predicted min exceeds max
};

struct FishnetData {
  std::vector<std::string> ids;
  std::vector<GeoPoint> points;
  std::vector<HgfVector> hgf;
};

/// Phase-1 max and phase-2 min (conditioned on that max) at every fishnet
/// point and year, then same-year stations replace nearby predictions.
PseudoGroundTruth generate_pseudo_gt(const GwlModel& max_model, const GwlModel& min_model, const FishnetData& fishnet,
                                     std::span<const int> years, const StationData& stations,
                                     const PgtOptions& opts = {});

// ---------------------------------------------------------------------------
// Task 2: upsampling from coarse storage cells

enum class RepStat { mode, median };

/// Per-factor representative: mode of exact values with ties to the smallest
/// value, or the median. Throws DataError on an empty set.
HgfVector representative_hgf(std::span<const HgfVector> cell_points, RepStat stat = RepStat::mode);

/// Serial id -> centroid, from a cell list. Throws SchemaError when a serial
/// appears with two different centroids.
std::map<int, GeoPoint> cell_centroids(std::span<const GldasCell> cells);
/// Nearest-centroid serial for each point (ties to the lower serial).
std::vector<int> map_to_serials(std::span<const GeoPoint> points, const std::map<int, GeoPoint>& centroids);

std::map<int, HgfVector> representative_hgfs(std::span<const HgfVector> hgf, std::span<const int> serials,
                                             RepStat stat = RepStat::mode);

struct UpsampleRow {
  std::string id;
  GeoPoint location;
  HgfVector point_hgf;
  HgfVector rep_hgf;
  int serial_id = 0;
  int year = 0;
  double max_gws = 0.0;
  double min_gws = 0.0;
  double max_gwl = 0.0;
  double min_gwl = 0.0;
};

/// One row per pseudo-ground-truth point. Throws JoinError listing the
/// offenders when a point has no serial, no cell for its year, or no
/// representative HGF.
std::vector<UpsampleRow> build_upsample_rows(std::span<const GldasCell> cells, const PseudoGroundTruth& pgt,
                                             std::span<const int> point_serials,
                                             const std::map<int, HgfVector>& rep_hgf);

struct UpsamplerOptions {
  forest::ForestParams params;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 42;
  bool use_year = false;
  std::size_t threads = 1;
};

struct UpsamplerReport {
  std::optional<eval::Metrics> test_max;
  std::optional<eval::Metrics> test_min;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_cells = 0;
  std::vector<std::string> warnings;
};

struct Upsampler {
  forest::Forest max_forest;
  forest::Forest min_forest;
  FeatureSchema schema;
  bool uses_year = false;
  UpsamplerReport report;

  std::vector<double> features(const HgfVector& point, const HgfVector& rep, double max_gws, double min_gws,
                               int year) const;
  std::pair<double, double> predict(const HgfVector& point, const HgfVector& rep, double max_gws, double min_gws,
                                    int year) const;
  std::vector<std::string> feature_names() const;

  std::string to_json() const;
  static Upsampler from_json(std::string_view text);
};

inline constexpr std::string_view kUpsamplerFormat = "aqd.upsampler/1";

std::vector<double> upsample_features(const FeatureSchema& schema, const UpsampleRow& row, bool use_year);

/// Two forests (max and min) sharing inputs. Rows must span at least 3
/// years (CoverageError); a single serial id only produces a warning.
Upsampler train_upsampler(std::span<const UpsampleRow> rows, const FeatureSchema& schema,
                          const UpsamplerOptions& opts);

/// Leave-one-year-out over `rows`; each fold scores the mean of the max and
/// min R^2 on the held-out year.
eval::LoyoResult loyo_upsampler(std::span<const UpsampleRow> rows, const FeatureSchema& schema,
                                const UpsamplerOptions& opts);

struct DownscalePoint {
  std::string id;
  GeoPoint location;
  int serial_id = 0;
  double max_gwl = 0.0;
  double min_gwl = 0.0;
};

/// One prediction pair per fishnet point for `year`. Throws JoinError when a
/// point's cell has no record for that year.
std::vector<DownscalePoint> downscale_year(const Upsampler& model, std::span<const GldasCell> cells, int year,
                                           const FishnetData& fishnet, std::span<const int> serials,
                                           const std::map<int, HgfVector>& rep_hgf);

}  // namespace aqd::pipeline
