#include <benchmark/benchmark.h>

#include "mgrn/oracle.hpp"
#include "mgrn/rng.hpp"

namespace {

using namespace mgrn;

void BM_GeneratePath(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(generate_path("IBM", "KO", steps, 7, 1000));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(steps));
}
BENCHMARK(BM_GeneratePath)->Arg(1000)->Arg(20000);

void BM_NormalDraws(benchmark::State& state) {
  RngStream stream(5);
  for (auto _ : state)
    benchmark::DoNotOptimize(normal_draws(stream, 1024));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_NormalDraws);

void BM_BestPredictor(benchmark::State& state) {
  const SimPath path = generate_path("IBM", "KO", 2000, 3, 1000);
  std::size_t t = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(best_predictor(oracle_state_at(path, t)));
    t = t + 1 < path.steps ? t + 1 : 5;
  }
}
BENCHMARK(BM_BestPredictor);

void BM_MinMse(benchmark::State& state) {
  const SimPath path = generate_path("IBM", "KO", 20000, 3, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(min_mse(path).mse);
}
BENCHMARK(BM_MinMse);

}  // namespace

BENCHMARK_MAIN();
