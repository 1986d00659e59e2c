#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace p2pfaas {

struct CostInputs {
    std::int64_t num_batches = 1;
    double lambda_rate_usd_per_s = 0.0;
    double ec2_rate_usd_per_s = 0.0;
    double computation_time_s = 0.0;
    int lambda_memory_mb = 0;  // reporting only
    int batch_size = 0;        // reporting only
};

// Per-peer gradient-computation cost of the serverless architecture:
// (lambda_rate * num_batches + ec2_rate) * computation_time. Note this
// multiplies the per-batch lambda rate by the *total* computation time, which
// double-counts relative to per-invocation billing; the executor's measured
// sum-of-invocations total is reported alongside wherever both exist.
double serverless_cost(const CostInputs& inputs);

// Per-peer cost of the instance-only architecture: ec2_rate * computation_time.
double instance_cost(double ec2_rate_usd_per_s, double computation_time_s);

enum class CostArchitecture { Serverless, Instance };

struct CostReport {
    CostArchitecture architecture = CostArchitecture::Instance;
    double cost_per_peer_usd = 0.0;
    CostInputs inputs;
    // Measured sum of per-invocation billed costs, when an execution ran.
    std::optional<double> measured_invocation_cost_usd;
};

struct CostComparison {
    double cost_ratio = 0.0;         // serverless / instance
    double time_reduction_pct = 0.0; // 100 * (instance_t - serverless_t) / instance_t
};

CostComparison compare_architectures(const CostReport& serverless_report, const CostReport& instance_report);

// Published cost benchmarks for gradient computation in a four-peer
// VGG11/MNIST training run, with the per-batch serverless fan-out and with a
// single larger instance. Used by the `paper-tables` subcommand and the
// acceptance suite.
struct ReferenceServerlessCell {
    int batch_size;
    int num_batches;
    const char* instance_type;
    int lambda_memory_mb;
    double compute_time_s;
    double ec2_rate_usd_per_s;
    double lambda_rate_usd_per_s;
    double published_cost_usd;
};

struct ReferenceInstanceCell {
    int batch_size;
    const char* instance_type;
    double compute_time_s;
    double ec2_rate_usd_per_s;
    double published_cost_usd;
};

extern const std::array<ReferenceServerlessCell, 4> kReferenceServerlessTable;
extern const std::array<ReferenceInstanceCell, 4> kReferenceInstanceTable;

struct CellCheck {
    std::string table;  // "serverless" or "instance"
    int batch_size;
    double computed_usd;
    double published_usd;
    double diff_usd;
    bool ok;
};

// Recomputes every published cost cell from its input row and compares
// against the published value at the given tolerance.
std::vector<CellCheck> check_reference_cost_tables(double tolerance_usd = 1e-4);

// Human-readable rendering of both tables plus the per-cell check and the
// batch-1024 cost ratio.
std::string render_reference_cost_tables(double tolerance_usd = 1e-4);

// CSV rendering: table,batch_size,num_batches,lambda_memory_mb,compute_time_s,
// ec2_rate_usd_per_s,lambda_rate_usd_per_s,computed_cost_usd,published_cost_usd.
std::string reference_cost_tables_csv();

}  // namespace p2pfaas
