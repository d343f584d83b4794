#include <vector>

#include <benchmark/benchmark.h>

#include "squant/data.hpp"
#include "squant/models.hpp"
#include "squant/optim.hpp"
#include "squant/oracles.hpp"

namespace {

squant::Dataset toy(std::size_t n) {
    squant::SyntheticSpec spec;
    spec.n = n;
    spec.w_bar = {1.0, 2.0, 1.0};
    spec.mixture = squant::Mixture{0.2, {-6.0, 4.0, 0.0}, std::nullopt};
    return squant::generate_quadratic(spec).data;
}

void BM_SmoothedOracle(benchmark::State& state) {
    const auto data = toy(static_cast<std::size_t>(state.range(0)));
    const auto model = squant::ModelSpec::parse("poly:2", squant::LossKind::squared);
    const squant::PointwiseLossMap map(data, model);
    const std::vector<double> w{0.5, 1.0, 0.5};
    const squant::SmoothingSpec spec(squant::SmoothingKind::euclidean, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(squant::smoothed_value_grad(map, w, squant::TailSpec(0.9), spec));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SmoothedOracle)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

void BM_ExactSubgradient(benchmark::State& state) {
    const auto data = toy(static_cast<std::size_t>(state.range(0)));
    const auto model = squant::ModelSpec::parse("poly:2", squant::LossKind::squared);
    const squant::PointwiseLossMap map(data, model);
    const std::vector<double> w{0.5, 1.0, 0.5};
    for (auto _ : state) {
        benchmark::DoNotOptimize(squant::superquantile_value_subgrad(map, w, squant::TailSpec(0.9)));
    }
}
BENCHMARK(BM_ExactSubgradient)->RangeMultiplier(10)->Range(100, 100000);

void BM_TrainSmoothed(benchmark::State& state) {
    const auto data = toy(static_cast<std::size_t>(state.range(0)));
    const auto model = squant::ModelSpec::parse("poly:2", squant::LossKind::squared);
    const squant::PointwiseLossMap map(data, model);
    const auto f = squant::make_smoothed_objective(
        map, squant::TailSpec(0.9), squant::SmoothingSpec(squant::SmoothingKind::euclidean, 0.1), 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(squant::minimize(f, {0.0, 0.0, 0.0}));
}
BENCHMARK(BM_TrainSmoothed)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
