#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "aqd/errors.hpp"
#include "aqd/evaluation.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aqd;
using namespace aqd::eval;

TEST_CASE("r2 and mse") {
  const std::vector<double> y{1, 2, 3};
  const std::vector<double> p{1, 2, 4};
  CHECK(mse(y, p) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r2_score(y, p) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r2_score(y, y) == 1.0);
  CHECK(mse(y, y) == 0.0);
  const std::vector<double> m(3, 2.0);
  CHECK(r2_score(y, m) == 0.0);

  const std::vector<double> flat(3, 4.0);
  CHECK_THROWS_AS(r2_score(flat, p), DataError);
  CHECK_THROWS_AS(mse(y, std::vector<double>{1, 2}), DataError);
  CHECK_THROWS_AS(mse(std::vector<double>{1}, std::vector<double>{1}), DataError);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(5, 2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 100;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
    }
    const auto mt = evaluate(a, b);
    CHECK(mt.n == n);
    CHECK(mt.r2 == doctest::Approx(oracle::r2(a, b)).epsilon(1e-12));
    CHECK(mt.mse == doctest::Approx(oracle::mse(a, b)).epsilon(1e-12));
    CHECK(mt.r2 <= 1.0);
    CHECK(mt.mse >= 0.0);
  }
}

TEST_CASE("per year split") {
  std::vector<SplitKey> keys;
  for (int y = 2001; y <= 2003; ++y) {
    for (int i = 0; i < 10; ++i) keys.push_back({"S" + std::to_string(i), y});
  }
  const auto plan = per_year_split(keys, 0.2, 7);
  REQUIRE(plan.years.size() == 3);
  for (const auto& ys : plan.years) {
    CHECK(ys.test.size() == 2);
    CHECK(ys.train.size() == 8);
    for (auto i : ys.test) CHECK(keys[i].year == ys.year);
  }
  CHECK(plan.test_indices().size() == 6);

  auto again = per_year_split(keys, 0.2, 7);
  CHECK(again.test_indices() == plan.test_indices());

  SUBCASE("partition") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
      std::vector<SplitKey> rows;
      const std::size_t n = 1 + rng() % 200;
      for (std::size_t i = 0; i < n; ++i) rows.push_back({"K" + std::to_string(i), 2000 + static_cast<int>(rng() % 6)});
      const auto p = per_year_split(rows, 0.2, t);
      auto tr = p.train_indices(), te = p.test_indices();
      std::set<std::size_t> all(tr.begin(), tr.end());
      for (auto i : te) CHECK(all.insert(i).second);
      CHECK(all.size() == n);
      for (const auto& ys : p.years) {
        const auto ny = ys.train.size() + ys.test.size();
        if (ny >= 2) CHECK(ys.test.size() == static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(ny))));
      }
    }
  }
  SUBCASE("invariant to row order") {
    std::vector<std::size_t> perm(keys.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(3);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<SplitKey> shuffled;
    for (auto i : perm) shuffled.push_back(keys[i]);
    const auto p2 = per_year_split(shuffled, 0.2, 7);
    std::set<std::pair<std::string, int>> a, b;
    for (auto i : plan.test_indices()) a.insert({keys[i].id, keys[i].year});
    for (auto i : p2.test_indices()) b.insert({shuffled[i].id, shuffled[i].year});
    CHECK(a == b);
  }
  SUBCASE("tiny years stay in train") {
    std::vector<SplitKey> rows{{"a", 2001}, {"b", 2002}, {"c", 2002}};
    const auto p = per_year_split(rows, 0.2, 1);
    CHECK(p.years[0].test.empty());
    CHECK_FALSE(p.warnings.empty());
  }
  CHECK_THROWS_AS(per_year_split(keys, 1.0, 1), ConfigError);
}

TEST_CASE("loyo folds") {
  const std::vector<int> years{2001, 2002, 2003, 2001, 2003, 2002, 2004};
  std::vector<int> seen_in_test(years.size(), 0);
  const auto res = loyo_cv(
      years,
      [&](const std::vector<std::size_t>& train) { return train; },
      [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
        const int y = years[test.front()];
        for (auto i : test) {
          CHECK(years[i] == y);
          ++seen_in_test[i];
        }
        for (auto i : train) CHECK(years[i] != y);
        CHECK(train.size() + test.size() == years.size());
        return Metrics{static_cast<double>(y - 2000), 1.0, test.size()};
      });
  CHECK(res.folds.size() == 4);
  CHECK(res.folds[0].year == 2001);
  CHECK(res.mean_r2 == 2.5);
  for (int c : seen_in_test) CHECK(c == 1);

  const std::vector<int> two{2001, 2002, 2001};
  auto noop = [](const std::vector<std::size_t>& t) { return t; };
  auto score = [](const std::vector<std::size_t>&, const std::vector<std::size_t>&) { return Metrics{}; };
  CHECK_THROWS_AS(loyo_cv(two, noop, score), CoverageError);
}

TEST_CASE("idw") {
  const GeoPoint a{23.0, 90.0}, b{23.0, 90.2};
  const std::vector<IdwSample> two{{a, 0.0}, {b, 10.0}};
  CHECK(idw_interpolate(two, a) == 0.0);
  CHECK(idw_interpolate(two, b) == 10.0);
  CHECK(idw_interpolate(two, GeoPoint{23.0, 90.1}) == doctest::Approx(5.0).epsilon(1e-9));

  const std::vector<IdwSample> three{{a, 1.0}, {b, 4.0}, {GeoPoint{23.1, 90.05}, 9.0}};
  const GeoPoint q{23.04, 90.07};
  double sw = 0, swv = 0;
  for (const auto& s : three) {
    const double w = 1.0 / std::pow(haversine_m(s.point, q), 2.0);
    sw += w;
    swv += w * s.value;
  }
  CHECK(idw_interpolate(three, q) == doctest::Approx(swv / sw).epsilon(1e-12));

  IdwOptions k1;
  k1.k = 1;
  CHECK(idw_interpolate(three, GeoPoint{23.0, 90.01}, k1) == 1.0);
  CHECK_THROWS_AS(idw_interpolate({}, q), DataError);
  IdwOptions bad;
  bad.power = 0;
  CHECK_THROWS_AS(idw_interpolate(three, q, bad), ConfigError);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lat(22, 24), lon(89, 91), val(-5, 30);
  for (int t = 0; t < 100; ++t) {
    std::vector<IdwSample> s(1 + rng() % 30);
    for (auto& x : s) x = {{lat(rng), lon(rng)}, val(rng)};
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end(), [](auto& l, auto& r) { return l.value < r.value; });
    const double v = idw_interpolate(s, GeoPoint{lat(rng), lon(rng)});
    CHECK(v >= lo->value - 1e-9);
    CHECK(v <= hi->value + 1e-9);
  }
}

TEST_CASE("violation rate and baseline comparison") {
  std::vector<FieldEstimate> field{
      {{23.0, 90.0}, 2001, 5.0, 3.0},
      {{23.1, 90.0}, 2001, 5.0, 6.0},
      {{23.2, 90.0}, 2001, 5.0, 5.0},
      {{23.3, 90.0}, 2001, 2.0, 1.0},
  };
  CHECK(violation_rate(field) == 0.25);

  std::vector<FieldEstimate> other = field;
  for (auto& e : other) e.min_gwl = e.max_gwl + 1.0;

  std::vector<WellObservation> holdout{
      {"A", {23.0, 90.0}, 2001, 5.0, 3.0},
      {"B", {23.1, 90.0}, 2001, 6.0, std::nullopt},
      {"C", {23.3, 90.0}, 2001, 1.0, 2.0},
  };
  const auto rep = compare_baseline(field, other, holdout);
  CHECK(rep.model_violation_rate == 0.25);
  CHECK(rep.idw_violation_rate == 1.0);
  CHECK(rep.model_max.n == 3);
  CHECK(rep.model_min.n == 2);
  CHECK(rep.model_max.mse == doctest::Approx((0 + 1 + 1) / 3.0));
  const auto again = compare_baseline(field, other, holdout);
  CHECK(again.model_max.r2 == rep.model_max.r2);
  CHECK(again.idw_min.mse == rep.idw_min.mse);

  CHECK_THROWS_AS(compare_baseline(field, other, {}), DataError);
  std::vector<WellObservation> far{{"Z", {10.0, 10.0}, 2001, 1.0, 0.5}, {"Y", {23.0, 90.0}, 2001, 1.0, 0.5}};
  CHECK_THROWS_AS(compare_baseline(field, other, far), JoinError);
}
