#include <benchmark/benchmark.h>

#include "p2pfaas/model.hpp"
#include "p2pfaas/rng.hpp"

namespace {

p2pfaas::Batch random_batch(const p2pfaas::Architecture& arch, std::size_t rows) {
    p2pfaas::Rng rng(11);
    p2pfaas::Batch batch;
    batch.feature_dim = arch.input_dim();
    for (std::size_t r = 0; r < rows; ++r) {
        for (int d = 0; d < arch.input_dim(); ++d) batch.features.push_back(rng.normal());
        batch.labels.push_back(static_cast<std::int32_t>(rng.next_u64() % arch.num_classes()));
    }
    return batch;
}

void BM_BatchGradientLogReg(benchmark::State& state) {
    const auto arch = p2pfaas::Architecture::logistic_regression(static_cast<int>(state.range(0)), 10);
    const auto model = p2pfaas::init_model(arch, 3);
    const auto batch = random_batch(arch, static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(p2pfaas::compute_batch_gradient(model, batch));
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_BatchGradientMlp(benchmark::State& state) {
    const auto arch = p2pfaas::Architecture::mlp({static_cast<int>(state.range(0)), 32, 10});
    const auto model = p2pfaas::init_model(arch, 3);
    const auto batch = random_batch(arch, static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(p2pfaas::compute_batch_gradient(model, batch));
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_Evaluate(benchmark::State& state) {
    const auto arch = p2pfaas::Architecture::mlp({16, 32, 10});
    const auto model = p2pfaas::init_model(arch, 3);
    const std::vector<p2pfaas::Batch> batches{random_batch(arch, 1024)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(p2pfaas::evaluate(model, batches));
    }
    state.SetItemsProcessed(state.iterations() * 1024);
}

}  // namespace

BENCHMARK(BM_BatchGradientLogReg)->Args({16, 64})->Args({128, 64})->Args({128, 1024});
BENCHMARK(BM_BatchGradientMlp)->Args({16, 64})->Args({128, 64});
BENCHMARK(BM_Evaluate);
