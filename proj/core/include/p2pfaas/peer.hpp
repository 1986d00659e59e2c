#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "p2pfaas/broker.hpp"
#include "p2pfaas/convergence.hpp"
#include "p2pfaas/dataset.hpp"
#include "p2pfaas/errors.hpp"
#include "p2pfaas/executor.hpp"
#include "p2pfaas/metrics.hpp"
#include "p2pfaas/model.hpp"

namespace p2pfaas {

enum class TrainingMode { Synchronous, Asynchronous };

struct PeerConfig {
    int rank = 0;
    int peers = 1;       // P
    int max_epochs = 1;  // E
    int batch_size = 32; // B
    double lr = 0.1;
    TrainingMode mode = TrainingMode::Synchronous;
    EncodingSpec encoding;
    ExecutorConfig executor;
    ConvergencePolicy convergence;
    Architecture arch;
    std::uint64_t seed = 0;  // shared by all peers; keys init and shuffles

    void validate() const;
};

enum class StopReason { Converged, EpochLimit };

std::string to_string(StopReason reason);

// One row per epoch: the five stage timings, validation metrics, learning
// rate in effect, and communication volume.
struct EpochTrace {
    std::int64_t epoch = 0;  // 1-based
    double compute_s = 0.0;
    double send_s = 0.0;
    double receive_s = 0.0;
    double update_s = 0.0;
    double convergence_s = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
    double lr = 0.0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_received = 0;
    std::uint64_t model_checksum = 0;  // post-update parameters
};

struct PeerResult {
    ModelParams model;
    std::vector<EpochTrace> traces;
    StopReason stop_reason = StopReason::EpochLimit;
    std::vector<MetricsRecorder::StageSummary> stage_summaries;
    std::vector<InvocationRecord> invocations;  // across all epochs
};

// Abort wrapper identifying where training failed; carries the traces of the
// epochs completed before the failure.
class PeerAbortError : public Error {
public:
    PeerAbortError(int rank, std::int64_t epoch, std::string stage, const std::string& cause,
                   std::vector<EpochTrace> partial);

    int rank;
    std::int64_t epoch;
    std::string stage;
    std::vector<EpochTrace> partial_traces;
};

// Element-wise mean over exactly `peers` entries keyed by rank 0..P-1.
GradientVector average_peer_gradients(const std::map<int, GradientVector>& gradients_peers, int peers);

// Runs the full per-peer training loop against a shared broker and store:
// per epoch it partitions and stores its data split, fans out per-batch
// gradient computation through the executor, averages batches, publishes to
// its own queue, consumes every other rank's latest gradient (epoch-gated in
// synchronous mode), passes the synchronization barrier (synchronous mode),
// averages across peers, applies the SGD update, and evaluates convergence
// on the shared validation set. Stops on convergence or after max_epochs,
// leaving a tombstone so other peers never block on this rank again.
PeerResult run_peer(const PeerConfig& config, const SampleSet& train, const SampleSet& validation, Broker& broker,
                    ObjectStore& store);

}  // namespace p2pfaas
