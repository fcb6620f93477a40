#include <benchmark/benchmark.h>

#include <cmath>

#include "aqd/random.hpp"
#include "aqd/terrain.hpp"

namespace {

aqd::Raster rough_dem(std::size_t n) {
  aqd::Rng rng(11);
  aqd::Raster dem(aqd::GridSpec{n, n, 0, 0, 30, -9999}, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      dem(r, c) = 0.05 * static_cast<double>(r + c) + 3 * std::sin(0.05 * r) * std::cos(0.07 * c) + rng.uniform();
    }
  }
  return dem;
}

}  // namespace

static void BM_FillPits(benchmark::State& state) {
  const auto dem = rough_dem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(aqd::terrain::fill_pits(dem));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_FillPits)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_FlowAccumulation(benchmark::State& state) {
  const auto filled = aqd::terrain::fill_pits(rough_dem(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(aqd::terrain::flow_accumulation(filled));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_FlowAccumulation)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_DistanceFromStream(benchmark::State& state) {
  const auto flow = aqd::terrain::flow_accumulation(aqd::terrain::fill_pits(rough_dem(512)));
  const auto streams = aqd::terrain::stream_mask(flow, 200);
  for (auto _ : state) benchmark::DoNotOptimize(aqd::terrain::distance_from_stream(streams));
}
BENCHMARK(BM_DistanceFromStream)->Unit(benchmark::kMillisecond);
