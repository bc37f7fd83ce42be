#include <benchmark/benchmark.h>

#include "drum/dataset.hpp"
#include "drum/fem.hpp"
#include "drum/geometry.hpp"
#include "drum/image.hpp"
#include "drum/loss.hpp"
#include "drum/mesh.hpp"
#include "drum/network.hpp"
#include "drum/random.hpp"

using namespace drum;

namespace {

Polygon pentagon() {
    Rng rng(12);
    return canonicalize(generate_pentagon(GenConfig{}, rng));
}

void BM_Triangulate(benchmark::State& state) {
    const Polygon p = pentagon();
    const double h = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(triangulate(p, h));
}
BENCHMARK(BM_Triangulate)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Eigensolve(benchmark::State& state) {
    const Polygon p = pentagon();
    const auto ops = assemble(triangulate(p, 1.0 / static_cast<double>(state.range(0))));
    state.counters["dofs"] = static_cast<double>(ops.size());
    for (auto _ : state) benchmark::DoNotOptimize(solve_eigs(ops, 100));
}
BENCHMARK(BM_Eigensolve)->Arg(7)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Rasterize(benchmark::State& state) {
    const Polygon p = pentagon();
    for (auto _ : state) benchmark::DoNotOptimize(rasterize(p));
}
BENCHMARK(BM_Rasterize);

void BM_D4Loss(benchmark::State& state) {
    const RasterImage truth = rasterize(pentagon());
    const RasterImage pred = RasterImage::filled(0.3);
    for (auto _ : state) benchmark::DoNotOptimize(d4_loss(pred, truth));
}
BENCHMARK(BM_D4Loss);

void BM_Forward(benchmark::State& state) {
    const Network net(ModelConfig::toy());
    const std::vector<double> input(static_cast<std::size_t>(net.config().input_length), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(input));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
