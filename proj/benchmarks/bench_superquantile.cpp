#include <algorithm>
#include <vector>

#include <benchmark/benchmark.h>

#include "squant/rng.hpp"
#include "squant/smoothing.hpp"
#include "squant/superquantile.hpp"

namespace {

std::vector<double> gaussian(std::size_t n) {
    squant::Rng rng(n);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

void BM_QuantileSelect(benchmark::State& state) {
    const squant::EmpiricalSample s(gaussian(static_cast<std::size_t>(state.range(0))));
    const squant::TailSpec tail(0.9);
    for (auto _ : state) benchmark::DoNotOptimize(squant::quantile(s, tail));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_QuantileSelect)->RangeMultiplier(10)->Range(100, 1000000)->Complexity();

void BM_QuantileSort(benchmark::State& state) {
    const auto values = gaussian(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        std::vector<double> copy(values);
        std::sort(copy.begin(), copy.end());
        const auto k = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(copy.size())));
        benchmark::DoNotOptimize(copy[std::max<std::size_t>(k, 1) - 1]);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_QuantileSort)->RangeMultiplier(10)->Range(100, 1000000)->Complexity();

void BM_SuperquantileIntegral(benchmark::State& state) {
    const squant::EmpiricalSample s(gaussian(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(squant::superquantile_integral(s, squant::TailSpec(0.9)));
}
BENCHMARK(BM_SuperquantileIntegral)->RangeMultiplier(10)->Range(100, 100000);

void BM_SuperquantileDual(benchmark::State& state) {
    const squant::EmpiricalSample s(gaussian(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(squant::superquantile_dual(s, squant::TailSpec(0.9)));
}
BENCHMARK(BM_SuperquantileDual)->RangeMultiplier(10)->Range(100, 100000);

void BM_SuperquantileVariational(benchmark::State& state) {
    const squant::EmpiricalSample s(gaussian(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(squant::superquantile_variational(s, squant::TailSpec(0.9)));
    }
}
BENCHMARK(BM_SuperquantileVariational)->RangeMultiplier(10)->Range(100, 100000);

template <squant::SmoothingKind Kind, squant::DualMethod Method>
void BM_SolveDual(benchmark::State& state) {
    const squant::EmpiricalSample s(gaussian(static_cast<std::size_t>(state.range(0))));
    const squant::SmoothingSpec spec(Kind, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(squant::solve_dual_1d(s, spec, squant::TailSpec(0.9), Method));
    }
}
BENCHMARK(BM_SolveDual<squant::SmoothingKind::euclidean, squant::DualMethod::closed_form>)
    ->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_SolveDual<squant::SmoothingKind::euclidean, squant::DualMethod::bisection>)
    ->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_SolveDual<squant::SmoothingKind::kl, squant::DualMethod::closed_form>)
    ->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_SolveDual<squant::SmoothingKind::kl, squant::DualMethod::bisection>)
    ->RangeMultiplier(10)->Range(100, 100000);

} // namespace
