// Serial reference versus OpenMP kernel for each parallel code path.

#include <benchmark/benchmark.h>

#include "fixture.hpp"
#include "random_instances.hpp"
#include "samod/instance.hpp"
#include "samod/network.hpp"
#include "samod/solve.hpp"

using namespace samod;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

const RoadNetwork& grid()
{
    static const RoadNetwork net = [] {
        testing::Rng rng(1);
        return testing::grid_network(rng, 14, 6);
    }();
    return net;
}

void BM_PathTable(benchmark::State& state)
{
    const RoadNetwork& net = grid();
    std::vector<NodeIndex> sources;
    for (NodeIndex v = 0; v < net.node_count(); ++v)
        sources.push_back(v);
    for (auto _ : state)
        benchmark::DoNotOptimize(PathTable(net, sources, mode(state)));
    state.SetLabel(state.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_PathTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BuildDag(benchmark::State& state)
{
    const RoadNetwork& net = grid();
    testing::Rng rng(2);
    const auto requests = testing::random_requests(rng, net, 60, 6 * 3600, 20 * 3600);
    const DepotSpec depot{0, 0, kSecondsPerDay};
    for (auto _ : state)
        benchmark::DoNotOptimize(build_dag(net, requests, depot, 22.0, mode(state)));
    state.SetLabel(state.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_BuildDag)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveBatch(benchmark::State& state)
{
    const auto w = testing::load_fixture();
    const auto scenarios = sample_scenarios(w.base, 4, 1, 8, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_batch(w.net, w.depot, scenarios, {}, mode(state)));
    state.SetLabel(state.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_SolveBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
