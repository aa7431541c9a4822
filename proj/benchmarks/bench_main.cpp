#include <benchmark/benchmark.h>

#include "sdmscr/analysis.hpp"
#include "sdmscr/embedding.hpp"
#include "sdmscr/encoder.hpp"
#include "sdmscr/objectives.hpp"
#include "sdmscr/synthetic.hpp"
#include "sdmscr/trainer.hpp"

using namespace sdmscr;

namespace {

struct Planted {
    TextAttributedGraph g;
    ViewTriple views;
};

Planted planted(std::size_t per_class) {
    SbmConfig sbm;
    sbm.nodes_per_class = per_class;
    sbm.seed = 1;
    auto g = generate_sbm(sbm);
    PlantConfig plant;
    plant.seed = 1;
    auto views = plant_views(g, plant).second;
    return {std::move(g), std::move(views)};
}

void BM_EncoderForward(benchmark::State& state) {
    const auto data = planted(static_cast<std::size_t>(state.range(0)));
    const NormalizedAdjacency adj(data.g);
    const auto params = init_params({64, 128, 64}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(forward(params, adj, data.views.ori).z);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.g.num_nodes()));
}
BENCHMARK(BM_EncoderForward)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_EncoderBackward(benchmark::State& state) {
    const auto data = planted(static_cast<std::size_t>(state.range(0)));
    const NormalizedAdjacency adj(data.g);
    const auto params = init_params({64, 128, 64}, 3);
    const auto out = forward(params, adj, data.views.ori);
    for (auto _ : state) benchmark::DoNotOptimize(backward(out.tape, out.z).grads);
}
BENCHMARK(BM_EncoderBackward)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_SdmLoss(benchmark::State& state) {
    const auto data = planted(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sdm_loss(data.views.ori, data.views.rel, data.views.irr, 0.5).loss);
}
BENCHMARK(BM_SdmLoss)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
    const auto data = planted(100);
    const NormalizedAdjacency adj(data.g);
    const auto params = init_params({64, 128, 64}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(combined_step(params, adj, data.g, data.views, 0.8, 0.5).grads);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_LaplacianEigen(benchmark::State& state) {
    const auto data = planted(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(laplacian_eigen(data.g).values);
}
BENCHMARK(BM_LaplacianEigen)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_HashEmbed(benchmark::State& state) {
    const std::string text =
        "The camera works exactly as described. The box was slightly dented when the courier left it.";
    for (auto _ : state) benchmark::DoNotOptimize(hash_embed(text, 64));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_HashEmbed);

}  // namespace
BENCHMARK_MAIN();
