#include <benchmark/benchmark.h>

#include "mgrn/cells.hpp"
#include "mgrn/report.hpp"
#include "mgrn/rng.hpp"
#include "mgrn/simgen.hpp"

namespace {

using namespace mgrn;

Mat random_window(int steps, int width, std::uint64_t seed) {
  Mat window(steps, width);
  RngStream s(seed);
  for (std::size_t i = 0; i < window.rows() * window.cols(); ++i)
    window.data()[i] = s.normal();
  return window;
}

ModelSpec bench_spec(const std::string& name) {
  if (name == "gru") return gru_spec(kInputColumns, 17);
  if (name == "lstm") return lstm_spec(kInputColumns, 14);
  if (name == "mgrn") return mgrn_spec(total_split_16(), 4, 2);
  return cwlstm_spec(total_split_16(), 2, 2);
}

void BM_ForwardWindow(benchmark::State& state, const std::string& arch) {
  const ModelSpec spec = bench_spec(arch);
  const ParamLayout layout(spec);
  const auto params = init_params(spec, RngStream(1));
  const Mat window = random_window(5, kInputColumns, 2);
  const WindowView view = window_view(window);
  for (auto _ : state)
    benchmark::DoNotOptimize(forward_window(spec, layout, params, view));
}

void BM_BackwardWindow(benchmark::State& state, const std::string& arch) {
  const ModelSpec spec = bench_spec(arch);
  const ParamLayout layout(spec);
  const auto params = init_params(spec, RngStream(1));
  const Mat window = random_window(5, kInputColumns, 2);
  const WindowView view = window_view(window);
  std::vector<double> grad(layout.total_size(), 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        backward_window(spec, layout, params, view, 1.25, grad));
  }
}

BENCHMARK_CAPTURE(BM_ForwardWindow, gru, std::string("gru"));
BENCHMARK_CAPTURE(BM_ForwardWindow, lstm, std::string("lstm"));
BENCHMARK_CAPTURE(BM_ForwardWindow, mgrn_total_split, std::string("mgrn"));
BENCHMARK_CAPTURE(BM_ForwardWindow, cwlstm_total_split, std::string("cwlstm"));
BENCHMARK_CAPTURE(BM_BackwardWindow, gru, std::string("gru"));
BENCHMARK_CAPTURE(BM_BackwardWindow, lstm, std::string("lstm"));
BENCHMARK_CAPTURE(BM_BackwardWindow, mgrn_total_split, std::string("mgrn"));
BENCHMARK_CAPTURE(BM_BackwardWindow, cwlstm_total_split, std::string("cwlstm"));

}  // namespace
