// Serial reference vs OpenMP kernels for trajectory counting and Monte Carlo
// capacity estimation. Both variants return identical results; only the
// schedule differs.

#include <benchmark/benchmark.h>

#include "flexfeed/capacity.hpp"
#include "flexfeed/engine.hpp"

namespace {

using namespace flexfeed;

Instance bench_instance(int horizon) {
  GeneratorParams gen;
  gen.horizon = horizon;
  gen.stations = 3;
  gen.arrival_rate = 0.6;
  gen.min_stay = 1;
  gen.max_stay = 4;
  gen.min_energy = 0;
  gen.max_energy = 3;
  gen.peak_rate = 1;
  gen.energy_quantum = 1;
  return Instance{horizon, generate_sessions(gen, 7), SignalGrid::uniform(0, 3, 4), {}};
}

void BM_CountSerial(benchmark::State& state) {
  const auto inst = bench_instance(static_cast<int>(state.range(0)));
  FeasibilitySearch search(inst, PolicyKind::LLF);
  const auto root = search.root();
  for (auto _ : state) benchmark::DoNotOptimize(search.count(root));
}

void BM_CountParallel(benchmark::State& state) {
  const auto inst = bench_instance(static_cast<int>(state.range(0)));
  FeasibilitySearch search(inst, PolicyKind::LLF);
  const auto root = search.root();
  for (auto _ : state) benchmark::DoNotOptimize(search.count_parallel(root));
}

void BM_CountMemoized(benchmark::State& state) {
  const auto inst = bench_instance(static_cast<int>(state.range(0)));
  SearchOptions opts;
  opts.energy_quantum = 1.0;
  FeasibilitySearch search(inst, PolicyKind::LLF, opts);
  const auto root = search.root();
  for (auto _ : state) benchmark::DoNotOptimize(search.count(root));
}

void BM_CapacitySerial(benchmark::State& state) {
  const auto inst = bench_instance(8);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_capacity_serial(inst, PolicyKind::LLF, FeedbackSource::lookahead(2), state.range(0), 1).mean);
}

void BM_CapacityParallel(benchmark::State& state) {
  const auto inst = bench_instance(8);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_capacity(inst, PolicyKind::LLF, FeedbackSource::lookahead(2), state.range(0), 1).mean);
}

}  // namespace

BENCHMARK(BM_CountSerial)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountParallel)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountMemoized)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CapacitySerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CapacityParallel)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
