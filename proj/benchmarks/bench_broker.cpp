#include <benchmark/benchmark.h>

#include <filesystem>

#include "p2pfaas/broker.hpp"
#include "p2pfaas/rng.hpp"

namespace {

struct BrokerEnv {
    std::filesystem::path root;
    p2pfaas::ObjectStore store;
    p2pfaas::Broker broker;

    BrokerEnv()
        : root(std::filesystem::temp_directory_path() / "p2pfaas-bench-store"),
          store((std::filesystem::remove_all(root), root)),
          broker(2, store) {}
};

p2pfaas::GradientVector random_gradient(std::size_t length) {
    p2pfaas::Rng rng(9);
    p2pfaas::GradientVector g;
    for (std::size_t i = 0; i < length; ++i) g.values.push_back(rng.normal());
    return g;
}

void BM_PublishConsumeRaw(benchmark::State& state) {
    BrokerEnv env;
    const auto g = random_gradient(static_cast<std::size_t>(state.range(0)));
    std::int64_t epoch = 1;
    for (auto _ : state) {
        env.broker.publish_gradient(0, epoch, g, {});
        benchmark::DoNotOptimize(env.broker.consume_gradient(1, 0, std::nullopt));
        ++epoch;
    }
    state.SetBytesProcessed(state.iterations() * (8 * state.range(0) + 18));
}

void BM_PublishConsumeQsgd(benchmark::State& state) {
    BrokerEnv env;
    const auto g = random_gradient(static_cast<std::size_t>(state.range(0)));
    p2pfaas::EncodingSpec enc{p2pfaas::GradientEncoding::Qsgd, 16};
    std::int64_t epoch = 1;
    for (auto _ : state) {
        env.broker.publish_gradient(0, epoch, g, enc, static_cast<std::uint64_t>(epoch));
        benchmark::DoNotOptimize(env.broker.consume_gradient(1, 0, std::nullopt));
        ++epoch;
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PublishConsumeRaw)->Arg(1000)->Arg(100000);
BENCHMARK(BM_PublishConsumeQsgd)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
