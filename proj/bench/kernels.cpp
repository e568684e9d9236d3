// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "adiabat/continuum.hpp"
#include "adiabat/crossing_sweep.hpp"

using namespace adiabat;

namespace {

struct AdvectCase {
    ContinuumDistribution initial;
    std::vector<double> grid;
};

const AdvectCase& advect_case() {
    static const AdvectCase c = [] {
        const auto dos = analytic_dos(TwoTerm{1, 0, 0, 1, 3, 2, 16});
        auto w0 = canonical_distribution(dos, 1.0, 0.4);
        auto grid = advect(w0, 0.5).grid();
        return AdvectCase{std::move(w0), std::move(grid)};
    }();
    return c;
}

const DiscreteSpectrum& ladder() {
    static const DiscreteSpectrum s = discrete_spectrum(TwoLadder{1.0, 1.0, 200, 200}, Sweep{0.8, 1.6});
    return s;
}

void BM_AdvectParallel(benchmark::State& state) {
    const auto& c = advect_case();
    for (auto _ : state) benchmark::DoNotOptimize(advect_onto(c.initial, 0.5, c.grid));
}

void BM_AdvectSerial(benchmark::State& state) {
    const auto& c = advect_case();
    for (auto _ : state) benchmark::DoNotOptimize(reference::advect_onto(c.initial, 0.5, c.grid));
}

void BM_CrossingsParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(find_crossings(ladder()));
}

void BM_CrossingsSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(reference::find_crossings(ladder()));
}

}  // namespace

BENCHMARK(BM_AdvectParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AdvectSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CrossingsParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CrossingsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
