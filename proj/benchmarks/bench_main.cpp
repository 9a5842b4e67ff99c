#include <benchmark/benchmark.h>

#include <random>

#include "laekit/backbones.hpp"
#include "laekit/mapper.hpp"
#include "laekit/mpi.hpp"
#include "laekit/trainer.hpp"

using namespace laekit;

static void BM_MapLatent(benchmark::State& state) {
    ToyBackbone bk{ToyConfig{}};
    std::mt19937_64 rng(1);
    Tensor z = Tensor::gaussian({32}, 1.0f, rng);
    for (auto _ : state) benchmark::DoNotOptimize(bk.map_latent(z));
}
BENCHMARK(BM_MapLatent);

static void BM_Generate(benchmark::State& state) {
    ToyBackbone bk{ToyConfig{}};
    std::mt19937_64 rng(2);
    LatentCode w = bk.map_latent(Tensor::gaussian({32}, 1.0f, rng));
    AlphaBranchParams alpha = bk.initial_alpha_params();
    for (auto _ : state) benchmark::DoNotOptimize(bk.generate(w, alpha));
}
BENCHMARK(BM_Generate);

static void BM_CompositeMpi(benchmark::State& state) {
    ToyBackbone bk{ToyConfig{}};
    std::mt19937_64 rng(3);
    LatentCode w = bk.map_latent(Tensor::gaussian({32}, 1.0f, rng));
    MultiplaneImage mpi = bk.generate(w, bk.initial_alpha_params());
    CameraPose pose{22.0f, -13.0f};
    for (auto _ : state) benchmark::DoNotOptimize(composite_mpi(mpi, pose));
}
BENCHMARK(BM_CompositeMpi);

static void BM_MapEdit(benchmark::State& state) {
    ToyBackbone bk{ToyConfig{}};
    std::mt19937_64 rng(4);
    LatentCode w = bk.map_latent(Tensor::gaussian({32}, 1.0f, rng));
    MapperParams p = init_mapper(32, 96, rng);
    Tensor dv = Tensor::gaussian({96}, 1.0f, rng);
    LatentSplit split = bk.split();
    for (auto _ : state) benchmark::DoNotOptimize(map_edit(w, dv, p, split));
}
BENCHMARK(BM_MapEdit);

static void BM_TrainStep(benchmark::State& state) {
    TrainConfig cfg;
    cfg.seed = 5;
    cfg.batch_latents = 2;
    cfg.attributes = {{"blond", "blond hair"}, {"smile", "smiling face"}};
    TrainState ts = init_train_state(cfg);
    for (auto _ : state) benchmark::DoNotOptimize(train_step(ts));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
