#include <algorithm>
#include <cmath>
#include <random>

#include "aqd/errors.hpp"
#include "aqd/forest.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aqd;
using namespace aqd::forest;

namespace {

struct Data {
  Matrix X;
  std::vector<double> y;
};

// y depends on columns 0 and 1 only; column 2 is noise.
Data friedman_like(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Data d{Matrix(n, 3), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) d.X(i, j) = u(rng);
    d.y.push_back(10 * d.X(i, 0) + 3 * std::sin(6 * d.X(i, 1)));
  }
  return d;
}

// Best SSE reduction over every feature and every gap between distinct values.
double brute_root_gain(const Matrix& X, std::span<const double> y, std::size_t min_leaf) {
  const std::size_t n = X.rows();
  const double total = std::accumulate(y.begin(), y.end(), 0.0);
  double best = 0;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return X(a, f) < X(b, f); });
    double sl = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      sl += y[idx[k]];
      if (X(idx[k], f) == X(idx[k + 1], f)) continue;
      const double wl = static_cast<double>(k + 1), wr = static_cast<double>(n - k - 1);
      if (wl < static_cast<double>(min_leaf) || wr < static_cast<double>(min_leaf)) continue;
      const double sr = total - sl;
      best = std::max(best, sl * sl / wl + sr * sr / wr - total * total / static_cast<double>(n));
    }
  }
  return best;
}

void collect_leaves(const Tree& t, std::vector<const TreeNode*>& out) {
  for (const auto& nd : t.nodes) {
    if (nd.is_leaf()) out.push_back(&nd);
  }
}

}  // namespace

TEST_CASE("matrix") {
  Matrix m;
  m.append_row(std::vector<double>{1, 2});
  m.append_row(std::vector<double>{3, 4});
  CHECK(m.rows() == 2);
  CHECK_THROWS(m.append_row(std::vector<double>{1}));
  const std::vector<std::size_t> pick{1, 1, 0};
  const auto s = m.select_rows(pick);
  CHECK(s(0, 0) == 3);
  CHECK(s(2, 1) == 2);
}

TEST_CASE("params validation") {
  ForestParams p;
  CHECK(p.resolved_mtry(42) == 14);
  CHECK(p.resolved_mtry(1) == 1);
  p.n_trees = 0;
  CHECK_THROWS_AS(p.validate(3), ConfigError);
  p = {};
  p.min_leaf = 0;
  CHECK_THROWS_AS(p.validate(3), ConfigError);
  p = {};
  p.mtry = 4;
  CHECK_THROWS_AS(p.validate(3), ConfigError);
}

TEST_CASE("fit rejects bad input") {
  const auto d = friedman_like(20, 1);
  ForestParams p;
  p.n_trees = 2;
  CHECK_THROWS_AS(Forest::fit(d.X, std::span(d.y).first(10), p), SchemaError);
  auto y = d.y;
  y[3] = std::nan("");
  CHECK_THROWS_AS(Forest::fit(d.X, y, p), DataError);
  p.min_leaf = 11;
  CHECK_THROWS_AS(Forest::fit(d.X, d.y, p), DataError);
}

TEST_CASE("single exhaustive tree") {
  const auto d = friedman_like(60, 2);
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.min_leaf = 1;
  p.mtry = 3;
  const auto f = Forest::fit(d.X, d.y, p);
  const auto& t = f.trees()[0];

  SUBCASE("interpolates training data") {
    for (std::size_t i = 0; i < 60; ++i) CHECK(f.predict_row(d.X.row(i)) == doctest::Approx(d.y[i]).epsilon(1e-12));
  }
  SUBCASE("root split is the best available") {
    const auto& root = t.nodes[0];
    const auto& l = t.nodes[static_cast<std::size_t>(root.left)];
    const auto& r = t.nodes[static_cast<std::size_t>(root.right)];
    const double gain = l.n * l.value * l.value + r.n * r.value * r.value - root.n * root.value * root.value;
    CHECK(gain == doctest::Approx(brute_root_gain(d.X, d.y, 1)).epsilon(1e-9));
  }
  SUBCASE("node bookkeeping") {
    for (const auto& nd : t.nodes) {
      if (nd.is_leaf()) continue;
      const auto& l = t.nodes[static_cast<std::size_t>(nd.left)];
      const auto& r = t.nodes[static_cast<std::size_t>(nd.right)];
      CHECK(l.n + r.n == nd.n);
      CHECK(l.n * l.value + r.n * r.value == doctest::Approx(nd.n * nd.value).epsilon(1e-9));
    }
    CHECK(t.leaf_count() == 60);
  }
}

TEST_CASE("step function is recovered exactly") {
  Matrix X(40, 1);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    X(i, 0) = static_cast<double>(i);
    y[i] = i < 17 ? 1.0 : 5.0;
  }
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.min_leaf = 1;
  const auto f = Forest::fit(X, y, p);
  const auto& t = f.trees()[0];
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].threshold == 16.5);
  CHECK(t.depth() == 1);
}

TEST_CASE("constant target gives a stump") {
  const auto d = friedman_like(30, 3);
  const std::vector<double> y(30, 2.5);
  ForestParams p;
  p.n_trees = 3;
  const auto f = Forest::fit(d.X, y, p);
  for (const auto& t : f.trees()) CHECK(t.nodes.size() == 1);
  CHECK(f.predict_row(d.X.row(0)) == 2.5);
  for (double v : f.importances()) CHECK(v == 0.0);
}

TEST_CASE("forest properties") {
  const auto d = friedman_like(400, 4);
  ForestParams p;
  p.n_trees = 25;
  p.min_leaf = 5;
  p.max_depth = 8;
  p.seed = 99;
  const auto f = Forest::fit(d.X, d.y, p);

  SUBCASE("prediction is the mean of tree traversals") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int i = 0; i < 200; ++i) {
      const std::vector<double> row{u(rng), u(rng), u(rng)};
      CHECK(f.predict_row(row) == doctest::Approx(oracle::forest_predict(f, row)).epsilon(1e-12));
    }
  }
  SUBCASE("leaf sizes and depth respect the limits") {
    for (const auto& t : f.trees()) {
      std::vector<const TreeNode*> leaves;
      collect_leaves(t, leaves);
      for (const auto* nd : leaves) CHECK(nd->n >= 5);
      CHECK(t.depth() <= 8);
    }
  }
  SUBCASE("predictions stay inside the target range") {
    const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 200; ++i) {
      const double v = f.predict_row(std::vector<double>{u(rng), u(rng), u(rng)});
      CHECK(v >= *lo);
      CHECK(v <= *hi);
    }
  }
  SUBCASE("importances") {
    const auto& imp = f.importances();
    CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(imp[0] > imp[2]);
    CHECK(imp[1] > imp[2]);
    const auto perm = permutation_importance(f, d.X, d.y, 3, 7);
    CHECK(perm.mean_drop[0] > perm.mean_drop[2]);
    CHECK(perm.baseline_r2 > 0.9);
    CHECK(std::abs(perm.mean_drop[2]) < 0.05);
  }
  SUBCASE("held-out accuracy") {
    const auto test = friedman_like(300, 40);
    CHECK(oracle::r2(test.y, f.predict(test.X)) > 0.9);
  }
  SUBCASE("seeded and thread independent") {
    CHECK(Forest::fit(d.X, d.y, p, {}, 1) == f);
    CHECK(Forest::fit(d.X, d.y, p, {}, 3) == f);
    auto q = p;
    q.seed = 100;
    CHECK_FALSE(Forest::fit(d.X, d.y, q) == f);
  }
  SUBCASE("json round trip") {
    const auto back = Forest::from_json(f.to_json());
    CHECK(back == f);
    CHECK(back.feature_names() == std::vector<std::string>{"f0", "f1", "f2"});
    CHECK(back.to_json() == f.to_json());
  }
  SUBCASE("partial dependence") {
    const std::vector<double> grid{0.05, 0.25, 0.5, 0.75, 0.95};
    const auto pd = partial_dependence(f, 0, grid, d.X);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      Matrix bg = d.X;
      for (std::size_t r = 0; r < bg.rows(); ++r) bg(r, 0) = grid[i];
      const auto preds = f.predict(bg);
      CHECK(pd[i] == doctest::Approx(oracle::mean(preds)).epsilon(1e-12));
    }
    CHECK(std::is_sorted(pd.begin(), pd.end()));
    const auto pd2 = partial_dependence_2d(f, 0, 1, grid, grid, d.X);
    CHECK(pd2.rows() == 5);
    CHECK(pd2.cols() == 5);
  }
}

TEST_CASE("json rejects unknown formats") {
  CHECK_THROWS_AS(Forest::from_json(R"({"format":"aqd.forest/9","trees":[]})"), SchemaError);
  CHECK_THROWS_AS(Forest::from_json("{not json"), SchemaError);
  CHECK_THROWS_AS(Forest::from_json(R"({"format":"aqd.forest/1"})"), SchemaError);
}

TEST_CASE("pearson correlation matrix") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Matrix X(100, 4);
  for (std::size_t i = 0; i < 100; ++i) {
    X(i, 0) = g(rng);
    X(i, 1) = 2 * X(i, 0) + 0.1 * g(rng);
    X(i, 2) = g(rng);
    X(i, 3) = 7.0;
  }
  const auto C = pearson_corr_matrix(X);
  auto column = [&](std::size_t j) {
    std::vector<double> v(100);
    for (std::size_t i = 0; i < 100; ++i) v[i] = X(i, j);
    return v;
  };
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(C(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(C(a, b) == C(b, a));
      CHECK(C(a, b) == doctest::Approx(oracle::pearson(column(a), column(b))).epsilon(1e-9));
    }
    CHECK(std::isnan(C(a, 3)));
  }
  CHECK(C(0, 1) > 0.99);
}
