#pragma once

// Recharge from the water-table-fluctuation method, Mann-Kendall trend test,
// Sen's slope and recharge-trend categories.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqd/geodata.hpp"

namespace aqd::analysis {

/// Yearly values at one location. Years strictly increasing.
struct PointSeries {
  GeoPoint location;
  std::vector<int> years;
  std::vector<double> values;

  /// Throws DataError on length mismatch, fewer than `min_len` values,
  /// non-increasing years or non-finite values.
  void validate(std::size_t min_len) const;
};

/// (max_gwl - min_gwl) * sy * 100, in cm. Negative when min > max; callers
/// flag that. Throws DomainError if sy is outside [0, 1].
double recharge_cm(double max_gwl_m, double min_gwl_m, double sy);

enum class RechargeCategory : std::uint8_t {
  significant_concern,
  moderate_concern,
  mild_decline,
  negligible,
  moderate_increase,
  high_increase,
};

inline constexpr std::array<double, 5> kRechargeEdges{-0.5, -0.3, -0.05, 0.05, 0.5};
inline constexpr double kRechargeRangeMin = -1.0;
inline constexpr double kRechargeRangeMax = 1.0;

std::string_view category_name(RechargeCategory c);

struct CategoryResult {
  RechargeCategory category = RechargeCategory::negligible;
  bool clamped = false;  // slope outside [-1, 1], put in an outer bin
};

/// Six bins on cm/year. A slope equal to an edge goes to the lower bin.
/// Throws DomainError on NaN.
CategoryResult categorize_recharge_slope(double slope_cm_per_year);

struct TrendResult {
  std::int64_t s = 0;
  double variance = 0.0;  // tie-corrected
  double z = 0.0;
  double p = 1.0;  // two-sided
  std::optional<double> sen_slope;
};

/// Needs at least 3 values. A constant series gives S = 0, p = 1.
TrendResult mann_kendall(const PointSeries& series);
/// Median of (x_j - x_i) / (t_j - t_i) over i < j. Needs at least 2 values.
double sens_slope(const PointSeries& series);
/// Mann-Kendall plus Sen's slope.
TrendResult trend(const PointSeries& series);

struct ChangeSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double max = 0.0;
  double min = 0.0;
  std::vector<double> edges;
  std::vector<double> bin_percent;  // edges.size() + 1 entries; value == edge goes low
};

/// Statistics of b - a over a shared point set. Throws SchemaError when the
/// key sets differ, DataError when empty or edges are not increasing.
ChangeSummary summarize_change(const std::map<std::string, double>& year_a,
                               const std::map<std::string, double>& year_b, std::span<const double> edges = {});

}  // namespace aqd::analysis
