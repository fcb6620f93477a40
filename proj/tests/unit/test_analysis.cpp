#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aqd/analysis.hpp"
#include "aqd/errors.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aqd;
using namespace aqd::analysis;

namespace {

PointSeries series(std::vector<double> v, int first_year = 2001) {
  PointSeries s;
  s.values = std::move(v);
  s.years.resize(s.values.size());
  std::iota(s.years.begin(), s.years.end(), first_year);
  return s;
}

}  // namespace

TEST_CASE("recharge") {
  CHECK(recharge_cm(10, 5, 0.1) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(recharge_cm(3, 3, 0.2) == 0.0);
  CHECK(recharge_cm(9, 1, 0.0) == 0.0);
  CHECK(recharge_cm(1, 2, 0.5) < 0.0);
  CHECK_THROWS_AS(recharge_cm(1, 0, 1.5), DomainError);
  CHECK_THROWS_AS(recharge_cm(1, 0, -0.01), DomainError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1), lv(0, 30);
  for (int i = 0; i < 500; ++i) {
    const double mx = lv(rng), mn = lv(rng), sy = u(rng), k = u(rng);
    CHECK(recharge_cm(mx, mn, sy * k) == doctest::Approx(k * recharge_cm(mx, mn, sy)).epsilon(1e-9));
    CHECK(recharge_cm(mn + 2 * (mx - mn), mn, sy) == doctest::Approx(2 * recharge_cm(mx, mn, sy)).epsilon(1e-9));
  }
}

TEST_CASE("recharge slope categories") {
  using C = RechargeCategory;
  CHECK(categorize_recharge_slope(0.0).category == C::negligible);
  CHECK(categorize_recharge_slope(-0.4).category == C::moderate_concern);
  CHECK(categorize_recharge_slope(-0.7).category == C::significant_concern);
  CHECK(categorize_recharge_slope(-0.2).category == C::mild_decline);
  CHECK(categorize_recharge_slope(0.3).category == C::moderate_increase);
  CHECK(categorize_recharge_slope(0.8).category == C::high_increase);

  // Edges go to the more negative bin.
  CHECK(categorize_recharge_slope(-0.5).category == C::significant_concern);
  CHECK(categorize_recharge_slope(-0.3).category == C::moderate_concern);
  CHECK(categorize_recharge_slope(-0.05).category == C::mild_decline);
  CHECK(categorize_recharge_slope(0.05).category == C::negligible);
  CHECK(categorize_recharge_slope(0.5).category == C::moderate_increase);

  CHECK(categorize_recharge_slope(-3.0).clamped);
  CHECK(categorize_recharge_slope(-3.0).category == C::significant_concern);
  CHECK(categorize_recharge_slope(2.0).category == C::high_increase);
  CHECK(categorize_recharge_slope(2.0).clamped);
  CHECK_FALSE(categorize_recharge_slope(1.0).clamped);
  CHECK_THROWS_AS(categorize_recharge_slope(std::nan("")), DomainError);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    CHECK(categorize_recharge_slope(a).category <= categorize_recharge_slope(b).category);
  }
  CHECK(category_name(C::significant_concern) != category_name(C::high_increase));
}

TEST_CASE("mann kendall examples") {
  auto inc = mann_kendall(series({1, 2, 3, 4, 5}));
  CHECK(inc.s == 10);
  CHECK(inc.variance == doctest::Approx(5 * 4 * 15 / 18.0));
  CHECK(inc.z == doctest::Approx(9 / std::sqrt(5 * 4 * 15 / 18.0)));

  const auto flat = mann_kendall(series({2, 2, 2, 2}));
  CHECK(flat.s == 0);
  CHECK(flat.p == 1.0);
  CHECK(flat.z == 0.0);

  CHECK_THROWS_AS(mann_kendall(series({1, 2})), DataError);
  auto dup = series({1, 2, 3});
  dup.years = {2001, 2001, 2002};
  CHECK_THROWS_AS(mann_kendall(dup), DataError);
}

TEST_CASE("mann kendall matches brute force") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 3 + rng() % 48;
    std::vector<double> v(n);
    // Small integer values force ties.
    const bool ties = t % 2 == 0;
    std::normal_distribution<double> g(0, 1);
    for (auto& x : v) x = ties ? static_cast<double>(rng() % 5) : g(rng);
    const auto got = mann_kendall(series(v));
    CHECK(got.s == oracle::mk_s(v));
    CHECK(got.variance == doctest::Approx(oracle::mk_variance(v)).epsilon(1e-12));
    CHECK(got.p >= 0.0);
    CHECK(got.p <= 1.0);
    if (std::abs(got.s) > 1) CHECK((got.z > 0) == (got.s > 0));

    auto rev = v;
    std::reverse(rev.begin(), rev.end());
    CHECK(mann_kendall(series(rev)).s == -got.s);
  }
}

TEST_CASE("mann kendall null calibration") {
  std::mt19937_64 rng(6);
  std::vector<double> v(20);
  std::iota(v.begin(), v.end(), 0.0);
  int quiet = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::shuffle(v.begin(), v.end(), rng);
    if (std::abs(mann_kendall(series(v)).z) < 1.96) ++quiet;
  }
  CHECK(quiet >= trials * 9 / 10);
}

TEST_CASE("sen slope") {
  auto a = series({1, 2, 3}, 0);
  CHECK(sens_slope(a) == 1.0);
  CHECK(sens_slope(series({0, 2, 1}, 0)) == 0.5);
  CHECK_THROWS_AS(sens_slope(series({1})), DataError);

  PointSeries gap;
  gap.years = {2000, 2002, 2008};
  gap.values = {0, 4, 16};
  CHECK(sens_slope(gap) == 2.0);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 3);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng() % 49;
    PointSeries s;
    int year = 1990;
    for (std::size_t i = 0; i < n; ++i) {
      year += 1 + static_cast<int>(rng() % 3);
      s.years.push_back(year);
      s.values.push_back(g(rng));
    }
    const double got = sens_slope(s);
    CHECK(got == doctest::Approx(oracle::sen_slope(s.years, s.values)).epsilon(1e-12));
    auto shifted = s;
    for (auto& v : shifted.values) v += 17.0;
    CHECK(sens_slope(shifted) == doctest::Approx(got).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("trend bundles both statistics") {
  const auto s = series({3, 1, 4, 1, 5, 9, 2, 6});
  const auto r = trend(s);
  REQUIRE(r.sen_slope.has_value());
  CHECK(*r.sen_slope == sens_slope(s));
  CHECK(r.s == mann_kendall(s).s);
}

TEST_CASE("summarize change") {
  std::map<std::string, double> a{{"p1", 1.0}, {"p2", 2.0}, {"p3", -1.0}};
  const auto same = summarize_change(a, a);
  CHECK(same.n == 3);
  CHECK(same.mean == 0.0);
  CHECK(same.std == 0.0);
  CHECK(same.max == 0.0);
  CHECK(same.min == 0.0);

  auto b = a;
  for (auto& [k, v] : b) v += 1.0;
  const auto up = summarize_change(a, b);
  CHECK(up.mean == doctest::Approx(1.0));
  CHECK(up.std == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

  auto c = a;
  c.erase("p3");
  c["p4"] = 0.0;
  CHECK_THROWS_AS(summarize_change(a, c), SchemaError);
  c.erase("p4");
  CHECK_THROWS_AS(summarize_change(a, c), SchemaError);
  CHECK_THROWS_AS(summarize_change({}, {}), DataError);
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(summarize_change(a, b, bad), DataError);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  std::map<std::string, double> x, y;
  std::vector<double> d;
  for (int i = 0; i < 500; ++i) {
    const auto key = "k" + std::to_string(i);
    x[key] = g(rng);
    y[key] = g(rng);
    d.push_back(y[key] - x[key]);
  }
  const std::vector<double> edges{-1.0, 0.0, 1.0};
  const auto s = summarize_change(x, y, edges);
  CHECK(s.mean == doctest::Approx(oracle::mean(d)).epsilon(1e-12));
  CHECK(s.std == doctest::Approx(oracle::pop_std(d)).epsilon(1e-12));
  CHECK(s.max == *std::max_element(d.begin(), d.end()));
  CHECK(s.min == *std::min_element(d.begin(), d.end()));
  REQUIRE(s.bin_percent.size() == 4);
  std::vector<int> counts(4, 0);
  for (double v : d) ++counts[static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [&](double e) { return v > e; }))];
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.bin_percent[i] == doctest::Approx(100.0 * counts[i] / 500.0));
}
