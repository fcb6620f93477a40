#include "aqd/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "aqd/errors.hpp"

namespace aqd::analysis {

void PointSeries::validate(std::size_t min_len) const {
  if (years.size() != values.size()) throw DataError("series years and values differ in length");
  if (values.size() < min_len) {
    throw DataError("series needs at least " + std::to_string(min_len) + " values, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] == years[i - 1]) throw DataError("duplicate year " + std::to_string(years[i]) + " in series");
    if (years[i] < years[i - 1]) throw DataError("series years are not increasing");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("series contains a non-finite value");
  }
}

double recharge_cm(double max_gwl_m, double min_gwl_m, double sy) {
  if (!(sy >= 0.0 && sy <= 1.0)) throw DomainError("specific yield " + format_double(sy) + " outside [0, 1]");
  return (max_gwl_m - min_gwl_m) * sy * 100.0;
}

std::string_view category_name(RechargeCategory c) {
  switch (c) {
    case RechargeCategory::significant_concern: return "significant_concern";
    case RechargeCategory::moderate_concern: return "moderate_concern";
    case RechargeCategory::mild_decline: return "mild_decline";
    case RechargeCategory::negligible: return "negligible";
    case RechargeCategory::moderate_increase: return "moderate_increase";
    case RechargeCategory::high_increase: return "high_increase";
  }
  return "unknown";
}

CategoryResult categorize_recharge_slope(double slope) {
  if (std::isnan(slope)) throw DomainError("cannot categorize a NaN slope");
  CategoryResult out;
  out.clamped = slope < kRechargeRangeMin || slope > kRechargeRangeMax;
  std::size_t bin = 0;
  while (bin < kRechargeEdges.size() && slope > kRechargeEdges[bin]) ++bin;
  out.category = static_cast<RechargeCategory>(bin);
  return out;
}

namespace {

// Number of pairs i < j with x[i] > x[j], by merge sort.
std::int64_t count_inversions(std::vector<double>& x, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(x, buf, lo, mid) + count_inversions(x, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (x[i] <= x[j]) {
      buf[k++] = x[i++];
    } else {
      inv += static_cast<std::int64_t>(mid - i);
      buf[k++] = x[j++];
    }
  }
  while (i < mid) buf[k++] = x[i++];
  while (j < hi) buf[k++] = x[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            x.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

TrendResult mann_kendall(const PointSeries& series) {
  series.validate(3);
  const auto n = static_cast<std::int64_t>(series.values.size());
  std::vector<double> x = series.values;
  std::vector<double> buf(x.size());
  const std::int64_t discordant = count_inversions(x, buf, 0, x.size());  // x is now sorted

  std::int64_t tied_pairs = 0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    tied_pairs += t * (t - 1) / 2;
    tie_term += static_cast<double>(t * (t - 1) * (2 * t + 5));
    i = j;
  }
  const std::int64_t total = n * (n - 1) / 2;
  const std::int64_t concordant = total - discordant - tied_pairs;

  TrendResult out;
  out.s = concordant - discordant;
  out.variance = (static_cast<double>(n * (n - 1) * (2 * n + 5)) - tie_term) / 18.0;
  if (out.variance <= 0.0) {
    out.z = 0.0;
    out.p = 1.0;
    return out;
  }
  const double sd = std::sqrt(out.variance);
  if (out.s > 0) {
    out.z = static_cast<double>(out.s - 1) / sd;
  } else if (out.s < 0) {
    out.z = static_cast<double>(out.s + 1) / sd;
  }
  out.p = std::erfc(std::fabs(out.z) / std::sqrt(2.0));
  return out;
}

double sens_slope(const PointSeries& series) {
  series.validate(2);
  const auto& t = series.years;
  const auto& x = series.values;
  std::vector<double> slopes;
  slopes.reserve(x.size() * (x.size() - 1) / 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      slopes.push_back((x[j] - x[i]) / static_cast<double>(t[j] - t[i]));
    }
  }
  const std::size_t m = slopes.size();
  const auto upper = slopes.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(slopes.begin(), upper, slopes.end());
  if (m % 2 == 1) return *upper;
  const double hi = *upper;
  const double lo = *std::max_element(slopes.begin(), upper);
  return lo + (hi - lo) / 2.0;
}

TrendResult trend(const PointSeries& series) {
  auto out = mann_kendall(series);
  out.sen_slope = sens_slope(series);
  return out;
}

ChangeSummary summarize_change(const std::map<std::string, double>& year_a,
                               const std::map<std::string, double>& year_b, std::span<const double> edges) {
  if (year_a.size() != year_b.size()) throw SchemaError("point sets differ in size");
  if (year_a.empty()) throw DataError("no points to summarize");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw DataError("bin edges must be strictly increasing");
  }
  std::vector<double> d;
  d.reserve(year_a.size());
  auto ib = year_b.begin();
  for (const auto& [key, va] : year_a) {
    if (ib->first != key) throw SchemaError("point '" + key + "' missing from the second map");
    d.push_back(ib->second - va);
    ++ib;
  }

  ChangeSummary out;
  out.n = d.size();
  out.edges.assign(edges.begin(), edges.end());
  out.bin_percent.assign(edges.size() + 1, 0.0);
  double sum = 0.0;
  out.max = d.front();
  out.min = d.front();
  for (double v : d) {
    sum += v;
    out.max = std::max(out.max, v);
    out.min = std::min(out.min, v);
    const auto bin = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
    out.bin_percent[bin] += 1.0;
  }
  out.mean = sum / static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(d.size()));
  for (auto& b : out.bin_percent) b = 100.0 * b / static_cast<double>(d.size());
  return out;
}

}  // namespace aqd::analysis
