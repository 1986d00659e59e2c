#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "p2pfaas/dataset.hpp"
#include "p2pfaas/model.hpp"
#include "p2pfaas/object_store.hpp"

namespace p2pfaas {

enum class ExecMode { InstanceSequential, ServerlessParallel };

struct ExecutorConfig {
    ExecMode mode = ExecMode::InstanceSequential;
    int max_concurrency = 1;               // treated as 1 in instance mode
    double invocation_overhead_ms = 50.0;  // per-call startup latency (serverless only)
    int lambda_memory_mb = 1024;
    double lambda_rate_usd_per_s = 0.0;
    double instance_rate_usd_per_s = 0.0;
    // Wall-clock seconds of simulated FaaS compute added per invocation, so
    // parallel speedups are measurable above scheduler noise. Implemented as
    // a timed wait: simulated cloud compute does not consume local CPU.
    double simulated_speed_factor = 0.0;
    int retry_count = 0;
};

struct InvocationRecord {
    std::int64_t batch_id = 0;
    std::chrono::system_clock::time_point start;
    double duration_s = 0.0;
    int memory_mb = 0;
    double billed_cost_usd = 0.0;  // duration * lambda rate; 0 in instance mode
    bool ok = true;
    std::string failure_reason;
};

struct Hyperparams {
    double lr = 0.01;
    std::string loss = "cross-entropy";
    std::string optimizer = "sgd";
};

// The dynamically generated fan-out: one parallel branch per batch, plus the
// shared model reference and hyperparameters each branch needs.
struct FanoutPlan {
    BatchManifest batch_keys;  // (batch_id, object-store key), dense ids 0..m-1
    std::string model_ref;
    Hyperparams hyper;
};

// Validates density/uniqueness of batch ids and orders branches by id.
FanoutPlan build_fanout_plan(const BatchManifest& manifest, const std::string& model_key, const Hyperparams& hyper);

// JSON document with one branch object per batch, so an external backend
// could execute the same plan.
std::string fanout_plan_to_json(const FanoutPlan& plan);
FanoutPlan fanout_plan_from_json(const std::string& json_text);

struct ExecutionResult {
    std::vector<GradientVector> gradients;  // ordered by batch_id
    std::vector<InvocationRecord> records;  // ordered by batch_id
    double wall_time_s = 0.0;
    int peak_concurrency = 0;  // high-water mark of in-flight branches
    double busy_time_s = 0.0;  // sum of branch durations
};

// Runs every branch of the plan: loads model and batch from the store,
// computes the batch gradient, and returns it through the store under a
// fresh key. Serverless mode runs up to max_concurrency branches at once,
// each paying the invocation overhead; instance mode runs them sequentially
// with no overhead. Any branch failure aborts the call with an
// ExecutionError naming the failed batch ids.
ExecutionResult execute(const FanoutPlan& plan, const ExecutorConfig& config, ObjectStore& store);

// Sum of billed invocation costs.
double total_lambda_cost(const std::vector<InvocationRecord>& records);

}  // namespace p2pfaas
