#include <benchmark/benchmark.h>

#include "p2pfaas/qsgd.hpp"
#include "p2pfaas/rng.hpp"

namespace {

p2pfaas::GradientVector random_gradient(std::size_t length) {
    p2pfaas::Rng rng(42);
    p2pfaas::GradientVector g;
    g.values.reserve(length);
    for (std::size_t i = 0; i < length; ++i) g.values.push_back(rng.normal());
    return g;
}

void BM_QsgdEncode(benchmark::State& state) {
    const auto g = random_gradient(static_cast<std::size_t>(state.range(0)));
    const auto s = static_cast<std::uint32_t>(state.range(1));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(p2pfaas::qsgd_encode(g, s, seed++));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_QsgdDecode(benchmark::State& state) {
    const auto g = random_gradient(static_cast<std::size_t>(state.range(0)));
    const auto q = p2pfaas::qsgd_encode(g, static_cast<std::uint32_t>(state.range(1)), 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(p2pfaas::qsgd_decode(q));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_QsgdPack(benchmark::State& state) {
    const auto g = random_gradient(static_cast<std::size_t>(state.range(0)));
    const auto q = p2pfaas::qsgd_encode(g, 16, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(p2pfaas::serialize_quantized(q));
    }
    state.SetBytesProcessed(state.iterations() * p2pfaas::quantized_payload_size(q.length, q.s));
}

}  // namespace

BENCHMARK(BM_QsgdEncode)->Args({1000, 16})->Args({100000, 16})->Args({100000, 1});
BENCHMARK(BM_QsgdDecode)->Args({1000, 16})->Args({100000, 16});
BENCHMARK(BM_QsgdPack)->Arg(100000);
