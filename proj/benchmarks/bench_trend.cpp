#include <benchmark/benchmark.h>

#include <numeric>

#include "aqd/analysis.hpp"
#include "aqd/random.hpp"

static void BM_Trend(benchmark::State& state) {
  aqd::Rng rng(3);
  aqd::analysis::PointSeries s;
  s.years.resize(static_cast<std::size_t>(state.range(0)));
  std::iota(s.years.begin(), s.years.end(), 1980);
  for (std::size_t i = 0; i < s.years.size(); ++i) s.values.push_back(0.1 * static_cast<double>(i) + rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(aqd::analysis::trend(s));
}
// Yearly series are short; 10 matches the synthetic benchmark.
BENCHMARK(BM_Trend)->Arg(10)->Arg(50)->Arg(500);
