#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bwd/calibration.hpp"
#include "bwd/engine.hpp"
#include "bwd/reference_engine.hpp"
#include "bwd/rng.hpp"

namespace {

std::vector<double> noise(std::size_t n) {
    bwd::Philox4x32 gen(7, n);
    std::normal_distribution<double> normal;
    std::vector<double> y(n);
    for (auto& v : y) v = normal(gen);
    return y;
}

void BM_FullMerge(benchmark::State& state) {
    const auto y = noise(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(bwd::full_merge_max_statistic(y, 1.0, 1));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FullMerge)->RangeMultiplier(2)->Range(1 << 10, 1 << 17)->Complexity(benchmark::oNLogN);

void BM_FullMergeNaive(benchmark::State& state) {
    const auto y = noise(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(bwd::reference::full_merge_max_statistic(y, 1.0, 1));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FullMergeNaive)->RangeMultiplier(2)->Range(1 << 8, 1 << 11)->Complexity(benchmark::oNSquared);

void BM_Calibrate(benchmark::State& state) {
    bwd::CalibrationSpec spec;
    spec.n = 1000;
    spec.B = 200;
    const auto exec = state.range(0) ? bwd::Execution::parallel : bwd::Execution::serial;
    for (auto _ : state) benchmark::DoNotOptimize(bwd::null_max_statistics(spec, {}, exec));
}
BENCHMARK(BM_Calibrate)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
