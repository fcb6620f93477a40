#include <benchmark/benchmark.h>

#include <cmath>

#include "aqd/forest.hpp"
#include "aqd/random.hpp"

using aqd::forest::Forest;
using aqd::forest::ForestParams;
using aqd::forest::Matrix;

namespace {

void make_data(std::size_t n, std::size_t p, Matrix& X, std::vector<double>& y) {
  aqd::Rng rng(7);
  X = Matrix(n, p);
  y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.normal();
    y[i] = 3 * X(i, 0) + std::sin(2 * X(i, 1)) + 0.1 * rng.normal();
  }
}

}  // namespace

static void BM_ForestFitTree(benchmark::State& state) {
  Matrix X;
  std::vector<double> y;
  make_data(static_cast<std::size_t>(state.range(0)), 42, X, y);
  ForestParams p;
  p.n_trees = 1;
  for (auto _ : state) benchmark::DoNotOptimize(Forest::fit(X, y, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForestFitTree)->Arg(5000)->Arg(40000)->Unit(benchmark::kMillisecond);

static void BM_ForestPredict(benchmark::State& state) {
  Matrix X;
  std::vector<double> y;
  make_data(5000, 42, X, y);
  ForestParams p;
  p.n_trees = 50;
  const auto f = Forest::fit(X, y, p);
  for (auto _ : state) benchmark::DoNotOptimize(f.predict(X));
  state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_ForestPredict)->Unit(benchmark::kMillisecond);
