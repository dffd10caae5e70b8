// Serial reference vs OpenMP kernels.
#include "isingdyn/ising.hpp"
#include "isingdyn/minus_one.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace isingdyn;

namespace {

Graph random_graph(int n, double p, unsigned seed) {
    std::mt19937 rng(seed);
    std::bernoulli_distribution coin(p);
    Graph g(n);
    for (int v = 1; v < n; ++v) g.add_edge(std::uniform_int_distribution<int>(0, v - 1)(rng), v);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (coin(rng) && g.multiplicity(u, v) == 0) g.add_edge(u, v);
    return g;
}

void BM_CountConfigurations(benchmark::State& state) {
    Graph g = random_graph(int(state.range(0)), 0.3, 7);
    BruteForceOptions opt;
    for (auto _ : state) benchmark::DoNotOptimize(count_configurations(g, opt).total());
}

void BM_CountConfigurationsSerial(benchmark::State& state) {
    Graph g = random_graph(int(state.range(0)), 0.3, 7);
    for (auto _ : state) benchmark::DoNotOptimize(count_configurations_serial(g).total());
}

Graph cubic_ladder(int rungs) {
    Graph g(2 * rungs);
    for (int i = 0; i < rungs; ++i) {
        g.add_edge(2 * i, 2 * i + 1);
        g.add_edge(2 * i, 2 * ((i + 1) % rungs));
        g.add_edge(2 * i + 1, 2 * ((i + 1) % rungs) + 1);
    }
    return g;
}

void BM_OddSubgraphs(benchmark::State& state) {
    Graph g = cubic_ladder(int(state.range(0)));
    OddSubgraphOptions opt;
    for (auto _ : state) benchmark::DoNotOptimize(odd_subgraph_polynomial(g, opt).total());
}

void BM_OddSubgraphsSerial(benchmark::State& state) {
    Graph g = cubic_ladder(int(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(odd_subgraph_polynomial_serial(g).total());
}

}  // namespace

BENCHMARK(BM_CountConfigurations)->DenseRange(12, 18, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountConfigurationsSerial)->DenseRange(12, 18, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OddSubgraphs)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OddSubgraphsSerial)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
