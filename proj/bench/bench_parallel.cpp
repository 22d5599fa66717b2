// Serial reference vs OpenMP kernels for the two data-parallel loops.

#include <benchmark/benchmark.h>

#include "ecg/eval.hpp"
#include "ecg/ingest.hpp"
#include "ecg/parallel.hpp"
#include "ecg/pca.hpp"
#include "ecg/synth.hpp"

namespace {

const ecg::Dataset& dataset() {
  static const ecg::Dataset ds = ecg::build_dataset(ecg::synth::generate_balanced(100, 1)).dataset;
  return ds;
}

const ecg::PcaModel& pca() {
  static const ecg::PcaModel m = ecg::pca_fit(ecg::stack_signals(dataset().segments));
  return m;
}

void BM_FeaturizeSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ecg::featurize_serial(dataset().segments, pca(), {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dataset().size()));
}

void BM_FeaturizeParallel(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ecg::featurize_parallel(dataset().segments, pca(), {}, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dataset().size()));
}

ecg::PipelineConfig short_config() {
  ecg::PipelineConfig c;
  c.train.epochs = 20;
  return c;
}

void BM_RepeatedEvalSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ecg::repeated_eval_serial(dataset(), short_config(), 8, 0));
}

void BM_RepeatedEvalParallel(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ecg::repeated_eval_parallel(dataset(), short_config(), 8, 0, threads));
}

}  // namespace

BENCHMARK(BM_FeaturizeSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FeaturizeParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RepeatedEvalSerial)->Unit(benchmark::kMillisecond)->UseRealTime()->Iterations(1);
BENCHMARK(BM_RepeatedEvalParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime()->Iterations(1);

BENCHMARK_MAIN();
