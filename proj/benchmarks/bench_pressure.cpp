#include <benchmark/benchmark.h>

#include "mfa/moran.hpp"
#include "mfa/polytope.hpp"
#include "mfa/pressure.hpp"
#include "mfa/spectrum.hpp"

using namespace mfa;

static void BM_PressureEvaluate(benchmark::State& state) {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const PressureContext ctx(map, f, static_cast<int>(state.range(0)));
    double q = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ctx.evaluate({q}, 0.7));
        q = -q;
    }
}
BENCHMARK(BM_PressureEvaluate)->Arg(1)->Arg(4)->Arg(8);

static void BM_DualDimension(benchmark::State& state) {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    SolverOptions opts;
    opts.k = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(dual_dimension(map, f, {0.3}, opts));
}
BENCHMARK(BM_DualDimension)->Arg(1)->Arg(2)->Arg(4);

static void BM_RotationSet(benchmark::State& state) {
    const BranchSystem map = BranchSystem::manneville_pomeau(0.5);
    AnalyticSource src;
    src.id = AnalyticSource::Id::coordinate;
    const PotentialTable f = map.discretize_analytic(src, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(rotation_set(map, f, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_RotationSet)->Arg(2)->Arg(4)->Arg(6);

static void BM_MoranSample(benchmark::State& state) {
    const BranchSystem map = BranchSystem::doubling();
    const PotentialTable f = PotentialTable::digit_indicator(2, 1);
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.25, 0.75});
    const MoranSchedule sched = build_block_schedule(map, f, mu, {0.25}, 0.1, 2);
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_moran(sched, map, f, state.range(0), ++seed));
}
BENCHMARK(BM_MoranSample)->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();
