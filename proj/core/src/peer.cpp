#include "p2pfaas/peer.hpp"

#include <sstream>

#include "p2pfaas/rng.hpp"
#include "p2pfaas/serialization.hpp"
#include "p2pfaas/util.hpp"

namespace p2pfaas {

namespace {

constexpr const char* kStageCompute = "compute-gradients";
constexpr const char* kStageSend = "send-gradients";
constexpr const char* kStageReceive = "receive-gradients";
constexpr const char* kStageUpdate = "model-update";
constexpr const char* kStageConvergence = "convergence-detection";

Batch validation_batch(const SampleSet& validation) {
    Batch batch;
    batch.batch_id = 0;
    batch.feature_dim = validation.feature_dim;
    batch.features = validation.features;
    batch.labels = validation.labels;
    return batch;
}

}  // namespace

void PeerConfig::validate() const {
    if (peers < 1) throw ConfigError("peer count must be >= 1");
    if (rank < 0 || rank >= peers) throw ConfigError("rank must lie in [0, peers)");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    arch.validate();
    convergence.validate();
}

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::Converged:
            return "converged";
        case StopReason::EpochLimit:
            return "epoch-limit";
    }
    return "unknown";
}

PeerAbortError::PeerAbortError(int rank_in, std::int64_t epoch_in, std::string stage_in, const std::string& cause,
                               std::vector<EpochTrace> partial)
    : Error([&] {
          std::ostringstream os;
          os << "peer " << rank_in << " aborted at epoch " << epoch_in << ", stage " << stage_in << ": " << cause;
          return os.str();
      }()),
      rank(rank_in),
      epoch(epoch_in),
      stage(std::move(stage_in)),
      partial_traces(std::move(partial)) {}

GradientVector average_peer_gradients(const std::map<int, GradientVector>& gradients_peers, int peers) {
    if (static_cast<int>(gradients_peers.size()) != peers) {
        std::ostringstream os;
        os << "gradient map incomplete: holds " << gradients_peers.size() << " of " << peers
           << " entries; missing ranks:";
        for (int r = 0; r < peers; ++r) {
            if (!gradients_peers.contains(r)) os << " " << r;
        }
        throw ProtocolError(os.str());
    }
    std::size_t length = 0;
    for (int r = 0; r < peers; ++r) {
        const auto it = gradients_peers.find(r);
        if (it == gradients_peers.end()) {
            std::ostringstream os;
            os << "gradient map incomplete; missing rank " << r;
            throw ProtocolError(os.str());
        }
        if (r == 0) {
            length = it->second.values.size();
        } else if (it->second.values.size() != length) {
            throw ShapeError("peer gradients differ in length");
        }
    }

    GradientVector out;
    out.values.assign(length, 0.0);
    out.batch_count = 0;
    for (int r = 0; r < peers; ++r) {
        const GradientVector& g = gradients_peers.at(r);
        for (std::size_t i = 0; i < length; ++i) out.values[i] += g.values[i];
        out.batch_count += g.batch_count;
    }
    const double inv = 1.0 / static_cast<double>(peers);
    for (double& v : out.values) v *= inv;
    return out;
}

PeerResult run_peer(const PeerConfig& config, const SampleSet& train, const SampleSet& validation, Broker& broker,
                    ObjectStore& store) {
    config.validate();
    if (validation.size() == 0) throw ConfigError("validation set is empty");
    if (broker.peers() != config.peers) throw ConfigError("broker peer count does not match config");

    const std::vector<Batch> validation_batches{validation_batch(validation)};
    const bool synchronous = config.mode == TrainingMode::Synchronous;

    PeerResult result;
    result.model = init_model(config.arch, config.seed);
    MetricsRecorder recorder;

    std::vector<double> loss_history;
    double current_lr = config.lr;

    std::int64_t epoch = 0;
    std::string stage = "setup";
    try {
        for (epoch = 1; epoch <= config.max_epochs; ++epoch) {
            EpochTrace trace;
            trace.epoch = epoch;
            trace.lr = current_lr;

            // Compute: partition this epoch's split, stage batches and model in
            // the store, fan out the per-batch gradient computation.
            stage = kStageCompute;
            recorder.stage_begin(kStageCompute);
            const std::vector<Partition> partitions =
                partition_and_batch(train, config.peers, config.batch_size, epoch, config.seed);
            const Partition& mine = partitions[static_cast<std::size_t>(config.rank)];
            const BatchManifest manifest = store_batches(store, mine);
            const std::string model_key = store.put(serialize_model(result.model));
            const FanoutPlan plan =
                build_fanout_plan(manifest, model_key, Hyperparams{current_lr, "cross-entropy", "sgd"});
            ExecutionResult exec = execute(plan, config.executor, store);
            GradientVector own_average = average_batch_gradients(exec.gradients);
            result.invocations.insert(result.invocations.end(), exec.records.begin(), exec.records.end());
            trace.compute_s = recorder.stage_end(kStageCompute, exec.busy_time_s);

            // Send: replace this rank's queue slot with the new average.
            stage = kStageSend;
            recorder.stage_begin(kStageSend);
            trace.bytes_sent = broker.publish_gradient(config.rank, epoch, own_average, config.encoding,
                                                       mix_seed(config.seed, static_cast<std::uint64_t>(config.rank),
                                                                static_cast<std::uint64_t>(epoch)));
            trace.send_s = recorder.stage_end(kStageSend);

            // Receive: everyone else's latest gradient; synchronous mode gates
            // on the current epoch and then rendezvous at the barrier so no
            // peer overwrites an epoch-e message before all have read it.
            stage = kStageReceive;
            recorder.stage_begin(kStageReceive);
            std::map<int, GradientVector> gradients_peers;
            gradients_peers.emplace(config.rank, std::move(own_average));
            for (int target = 0; target < config.peers; ++target) {
                if (target == config.rank) continue;
                ConsumeResult consumed = broker.consume_gradient(
                    config.rank, target, synchronous ? std::optional<std::int64_t>(epoch) : std::nullopt);
                trace.bytes_received += consumed.bytes_transferred;
                gradients_peers.emplace(target, std::move(consumed.gradient));
            }
            if (synchronous) broker.barrier_arrive_and_wait(config.rank, epoch);
            trace.receive_s = recorder.stage_end(kStageReceive);

            // Update: unweighted mean across all P ranks, then the SGD step.
            stage = kStageUpdate;
            recorder.stage_begin(kStageUpdate);
            GradientVector averaged = average_peer_gradients(gradients_peers, config.peers);
            averaged.source_version = result.model.version;  // adopt for the local parameters
            result.model = apply_update(result.model, averaged, current_lr);
            trace.update_s = recorder.stage_end(kStageUpdate);

            // Convergence: shared validation set, deterministic plateau/early-stop
            // replay so synchronous peers always agree.
            stage = kStageConvergence;
            recorder.stage_begin(kStageConvergence);
            const Evaluation eval = evaluate(result.model, validation_batches);
            loss_history.push_back(eval.loss.value);
            const ConvergenceDecision decision = check_convergence(config.convergence, loss_history, config.lr);
            trace.convergence_s = recorder.stage_end(kStageConvergence);

            trace.loss = eval.loss.value;
            trace.accuracy = eval.accuracy;
            trace.model_checksum = model_checksum(result.model);
            result.traces.push_back(trace);

            if (decision.stop) {
                result.stop_reason = StopReason::Converged;
                broker.mark_finished(config.rank, epoch);
                result.stage_summaries = recorder.summarize();
                return result;
            }
            current_lr = decision.lr;
        }
    } catch (const std::exception& e) {
        // No tombstone here: surviving peers should fail loudly via their own
        // timeouts rather than silently train on this rank's stale gradient.
        throw PeerAbortError(config.rank, epoch, stage, e.what(), result.traces);
    }

    result.stop_reason = StopReason::EpochLimit;
    broker.mark_finished(config.rank, config.max_epochs);
    result.stage_summaries = recorder.summarize();
    return result;
}

}  // namespace p2pfaas
