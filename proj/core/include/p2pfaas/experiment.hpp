#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "p2pfaas/config.hpp"
#include "p2pfaas/cost.hpp"
#include "p2pfaas/peer.hpp"

namespace p2pfaas {

struct RunArtifacts {
    std::string run_id;
    std::filesystem::path out_dir;
    std::filesystem::path config_snapshot;
    std::filesystem::path trace_csv;
    std::filesystem::path cost_csv;
    std::filesystem::path metrics_csv;
    std::filesystem::path summary_path;
    std::vector<PeerResult> peers;  // indexed by rank
    std::vector<CostReport> cost_reports;
    std::uint64_t final_model_checksum = 0;  // rank 0
};

// Launches P concurrent peers against a shared broker/store and writes the
// run directory: config snapshot, per-epoch trace CSV, per-peer cost CSV,
// and a human-readable summary. Throws PeerAbortError on any peer failure
// (after all threads have been joined).
RunArtifacts run_experiment(const RunConfig& config);

// Deterministic run identifier: hash of the effective configuration.
std::string run_id_for(const RunConfig& config);

// Trace CSV schema, one row per epoch per peer.
inline constexpr const char* kTraceCsvHeader =
    "run_id,rank,epoch,compute_s,send_s,receive_s,update_s,convergence_s,loss,accuracy,lr,bytes_sent,"
    "bytes_received,stop_reason";

struct SweepRow {
    std::string value;
    double compute_time_s = 0.0;  // mean per-peer total gradient-computation time
    double comm_time_s = 0.0;     // mean per-peer total send+receive time
    double cost_usd = 0.0;        // mean per-peer cost for the configured architecture
    double accuracy = 0.0;        // mean final validation accuracy
    // Not part of the comparison CSV; kept for scaling checks.
    double comm_bytes_per_peer = 0.0;
};

struct SweepArtifacts {
    std::filesystem::path comparison_csv;
    std::vector<SweepRow> rows;
    std::vector<RunArtifacts> runs;
};

// Runs one experiment per value of the axis (batch_size | peers | encoding |
// mode) and writes a combined comparison CSV with columns
// value,compute_time,comm_time,cost,accuracy.
SweepArtifacts sweep_experiment(const RunConfig& base, const std::string& axis,
                                const std::vector<std::string>& values);

}  // namespace p2pfaas
