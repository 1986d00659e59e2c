#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <thread>

#include "p2pfaas/broker.hpp"
#include "p2pfaas/errors.hpp"
#include "p2pfaas/peer.hpp"
#include "test_support.hpp"

using namespace p2pfaas;

namespace {

Dataset blobs(std::int64_t n, double sep = 3.0, std::uint64_t seed = 13, int classes = 2, int features = 2) {
    DatasetSpec spec;
    spec.source = SyntheticBlobsSpec{classes, features, n, sep, seed};
    return generate(spec);
}

PeerConfig base_config(int rank, int peers, int epochs, const Architecture& arch) {
    PeerConfig config;
    config.rank = rank;
    config.peers = peers;
    config.max_epochs = epochs;
    config.batch_size = 32;
    config.lr = 0.1;
    config.mode = TrainingMode::Synchronous;
    config.arch = arch;
    config.seed = 7;
    config.executor.mode = ExecMode::InstanceSequential;
    config.convergence.early_stop_patience = 50;  // effectively off unless a test wants it
    config.convergence.plateau_patience = 25;
    return config;
}

std::vector<PeerResult> run_peers(const std::function<PeerConfig(int)>& make_config, int peers, const Dataset& ds,
                                  Broker& broker, ObjectStore& store) {
    std::vector<PeerResult> results(static_cast<std::size_t>(peers));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(peers));
    std::vector<std::thread> threads;
    for (int rank = 0; rank < peers; ++rank) {
        threads.emplace_back([&, rank] {
            try {
                results[static_cast<std::size_t>(rank)] =
                    run_peer(make_config(rank), ds.train, ds.validation, broker, store);
            } catch (...) {
                failures[static_cast<std::size_t>(rank)] = std::current_exception();
            }
        });
    }
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }
    return results;
}

}  // namespace

TEST_CASE("average_peer_gradients") {
    GradientVector g0{{0.0, 2.0}, 0, 1};
    GradientVector g1{{2.0, 0.0}, 0, 1};

    SUBCASE("identical entries average to themselves") {
        const GradientVector avg = average_peer_gradients({{0, g0}, {1, g0}}, 2);
        CHECK(avg.values[0] == doctest::Approx(0.0));
        CHECK(avg.values[1] == doctest::Approx(2.0));
    }

    SUBCASE("hand arithmetic") {
        const GradientVector avg = average_peer_gradients({{0, g0}, {1, g1}}, 2);
        CHECK(avg.values[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(avg.values[1] == doctest::Approx(1.0).epsilon(1e-15));
    }

    SUBCASE("matches a brute-force mean for P=4") {
        std::map<int, GradientVector> gp;
        std::vector<double> expected(8, 0.0);
        std::uint64_t state = 99;
        for (int rank = 0; rank < 4; ++rank) {
            GradientVector g;
            for (int i = 0; i < 8; ++i) {
                state = state * 6364136223846793005ull + 1442695040888963407ull;
                const double v = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
                g.values.push_back(v);
                expected[static_cast<std::size_t>(i)] += v / 4.0;
            }
            gp.emplace(rank, std::move(g));
        }
        const GradientVector avg = average_peer_gradients(gp, 4);
        for (int i = 0; i < 8; ++i) {
            CHECK(std::fabs(avg.values[static_cast<std::size_t>(i)] - expected[static_cast<std::size_t>(i)]) <= 1e-12);
        }
    }

    SUBCASE("incomplete map names the missing ranks") {
        try {
            average_peer_gradients({{0, g0}, {2, g1}}, 4);
            FAIL("expected ProtocolError");
        } catch (const ProtocolError& e) {
            const std::string what = e.what();
            CHECK(what.find("1") != std::string::npos);
            CHECK(what.find("3") != std::string::npos);
        }
    }
}

TEST_CASE("P=1 peer matches a single-process SGD oracle") {
    test::TempDir tmp;
    const Dataset ds = blobs(500, 3.0, 21);
    const Architecture arch = Architecture::logistic_regression(2, 2);

    ObjectStore store(tmp.path() / "store");
    Broker broker(1, store);
    PeerConfig config = base_config(0, 1, 20, arch);
    const PeerResult result = run_peer(config, ds.train, ds.validation, broker, store);

    // Independent oracle: plain mini-batch SGD over the same partition
    // stream, no broker, no executor, no store.
    ModelParams model = init_model(arch, config.seed);
    Batch val;
    val.feature_dim = ds.validation.feature_dim;
    val.features = ds.validation.features;
    val.labels = ds.validation.labels;
    std::vector<double> losses;
    double lr = config.lr;
    double final_loss = 0.0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto partitions = partition_and_batch(ds.train, 1, config.batch_size, epoch, config.seed);
        std::vector<GradientVector> grads;
        for (const Batch& batch : partitions[0].batches) grads.push_back(compute_batch_gradient(model, batch));
        GradientVector avg = average_batch_gradients(grads);
        avg.source_version = model.version;
        model = apply_update(model, avg, lr);
        const Evaluation eval = evaluate(model, {val});
        losses.push_back(eval.loss.value);
        final_loss = eval.loss.value;
        const ConvergenceDecision decision = check_convergence(config.convergence, losses, config.lr);
        if (decision.stop) break;
        lr = decision.lr;
    }

    CHECK(result.traces.size() == losses.size());
    CHECK(std::fabs(result.traces.back().loss - final_loss) <= 1e-9);
    CHECK(result.model.values == model.values);  // stronger: bitwise identical
    CHECK(result.traces.back().accuracy >= 0.95);
}

TEST_CASE("P=4 synchronous peers hold bitwise-identical models after every epoch") {
    test::TempDir tmp;
    const Dataset ds = blobs(400, 3.0, 5);
    const Architecture arch = Architecture::logistic_regression(2, 2);

    ObjectStore store(tmp.path() / "store");
    Broker broker(4, store);
    const int epochs = 6;
    const auto results = run_peers([&](int rank) { return base_config(rank, 4, epochs, arch); }, 4, ds, broker, store);

    REQUIRE(results.size() == 4);
    for (const PeerResult& result : results) REQUIRE(result.traces.size() == static_cast<std::size_t>(epochs));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const std::uint64_t checksum = results[0].traces[static_cast<std::size_t>(epoch)].model_checksum;
        for (const PeerResult& result : results) {
            CHECK(result.traces[static_cast<std::size_t>(epoch)].model_checksum == checksum);
        }
    }
    CHECK(results[0].model.values == results[1].model.values);
    CHECK(results[0].model.values == results[2].model.values);
    CHECK(results[0].model.values == results[3].model.values);

    // Epoch lockstep from the barrier log: all arrivals for epoch e precede
    // every release for epoch e, and releases precede the next epoch's arrivals.
    const auto events = broker.barrier_events();
    std::map<std::int64_t, std::pair<std::uint64_t, std::uint64_t>> window;  // epoch -> (max arrive, min release)
    for (const BarrierEvent& ev : events) {
        auto& [max_arrive, min_release] = window.try_emplace(ev.epoch, 0, ~0ull).first->second;
        if (ev.kind == BarrierEvent::Kind::Arrive) max_arrive = std::max(max_arrive, ev.seq);
        if (ev.kind == BarrierEvent::Kind::Release) min_release = std::min(min_release, ev.seq);
    }
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        const auto& [max_arrive, min_release] = window.at(epoch);
        CHECK(max_arrive < min_release);
        if (epoch > 1) CHECK(window.at(epoch - 1).second < ~0ull);
    }
}

TEST_CASE("every epoch trace records all five stage timings") {
    test::TempDir tmp;
    const Dataset ds = blobs(200, 3.0, 31);
    const Architecture arch = Architecture::logistic_regression(2, 2);
    ObjectStore store(tmp.path() / "store");
    Broker broker(2, store);
    const auto results = run_peers([&](int rank) { return base_config(rank, 2, 3, arch); }, 2, ds, broker, store);

    for (const PeerResult& result : results) {
        for (const EpochTrace& trace : result.traces) {
            CHECK(trace.compute_s > 0.0);
            CHECK(trace.send_s > 0.0);
            CHECK(trace.receive_s > 0.0);
            CHECK(trace.update_s > 0.0);
            CHECK(trace.convergence_s > 0.0);
            CHECK(trace.bytes_sent > 0);
            CHECK(trace.bytes_received > 0);
            CHECK(trace.lr > 0.0);
        }
        REQUIRE(result.stage_summaries.size() == 5);
        for (const auto& stage : result.stage_summaries) {
            CHECK(stage.samples == static_cast<int>(result.traces.size()));
        }
    }
}

TEST_CASE("asynchronous peers complete without a barrier and converge") {
    test::TempDir tmp;
    const Dataset ds = blobs(400, 3.0, 17);
    const Architecture arch = Architecture::logistic_regression(2, 2);
    ObjectStore store(tmp.path() / "store");
    Broker broker(2, store);
    const auto results = run_peers(
        [&](int rank) {
            PeerConfig config = base_config(rank, 2, 12, arch);
            config.mode = TrainingMode::Asynchronous;
            return config;
        },
        2, ds, broker, store);
    CHECK(broker.barrier_events().empty());
    for (const PeerResult& result : results) {
        CHECK(result.traces.back().accuracy >= 0.9);
    }
}

TEST_CASE("early stopping publishes a tombstone and reports convergence") {
    test::TempDir tmp;
    const Dataset ds = blobs(300, 6.0, 3);  // far-apart blobs converge almost immediately
    const Architecture arch = Architecture::logistic_regression(2, 2);
    ObjectStore store(tmp.path() / "store");
    Broker broker(1, store);
    PeerConfig config = base_config(0, 1, 200, arch);
    config.lr = 0.5;
    config.convergence.early_stop_patience = 3;
    config.convergence.min_delta = 1e-3;
    const PeerResult result = run_peer(config, ds.train, ds.validation, broker, store);
    CHECK(result.stop_reason == StopReason::Converged);
    CHECK(result.traces.size() < 200);
}

TEST_CASE("a missing peer aborts with epoch and stage context") {
    test::TempDir tmp;
    const Dataset ds = blobs(200, 3.0, 23);
    const Architecture arch = Architecture::logistic_regression(2, 2);
    ObjectStore store(tmp.path() / "store");
    BrokerConfig broker_config;
    broker_config.consume_timeout_s = 0.3;
    broker_config.barrier_timeout_s = 0.3;
    Broker broker(2, store, broker_config);

    PeerConfig config = base_config(0, 2, 3, arch);
    try {
        run_peer(config, ds.train, ds.validation, broker, store);  // rank 1 never shows up
        FAIL("expected PeerAbortError");
    } catch (const PeerAbortError& e) {
        CHECK(e.rank == 0);
        CHECK(e.epoch == 1);
        CHECK(e.stage == "receive-gradients");
        CHECK(e.partial_traces.empty());
        CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
}

TEST_CASE("qsgd encoding trains and transfers fewer bytes") {
    test::TempDir tmp;
    const Dataset ds = blobs(400, 3.0, 29, 2, 8);  // 8 features to make raw payloads heavier
    const Architecture arch = Architecture::logistic_regression(8, 2);
    ObjectStore store(tmp.path() / "store");

    Broker broker_raw(2, store);
    const auto raw_results =
        run_peers([&](int rank) { return base_config(rank, 2, 8, arch); }, 2, ds, broker_raw, store);

    Broker broker_q(2, store);
    const auto qsgd_results = run_peers(
        [&](int rank) {
            PeerConfig config = base_config(rank, 2, 8, arch);
            config.encoding = EncodingSpec{GradientEncoding::Qsgd, 16};
            return config;
        },
        2, ds, broker_q, store);

    const auto bytes_of = [](const PeerResult& r) {
        std::uint64_t total = 0;
        for (const EpochTrace& t : r.traces) total += t.bytes_sent + t.bytes_received;
        return total;
    };
    CHECK(bytes_of(qsgd_results[0]) < bytes_of(raw_results[0]));
    CHECK(qsgd_results[0].traces.back().accuracy >= 0.9);  // still learns
}
