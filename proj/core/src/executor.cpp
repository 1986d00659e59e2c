#include "p2pfaas/executor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/serialization.hpp"

namespace p2pfaas {

namespace {

void validate_config(const ExecutorConfig& config) {
    if (config.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (config.invocation_overhead_ms < 0.0) throw ConfigError("invocation_overhead_ms must be >= 0");
    if (config.lambda_rate_usd_per_s < 0.0 || config.instance_rate_usd_per_s < 0.0) {
        throw ConfigError("cost rates must be >= 0");
    }
    if (config.simulated_speed_factor < 0.0) throw ConfigError("simulated_speed_factor must be >= 0");
    if (config.retry_count < 0) throw ConfigError("retry_count must be >= 0");
}

}  // namespace

FanoutPlan build_fanout_plan(const BatchManifest& manifest, const std::string& model_key, const Hyperparams& hyper) {
    if (manifest.empty()) throw PlanError("fan-out plan needs at least one batch");
    if (model_key.empty()) throw PlanError("fan-out plan needs a model reference");

    FanoutPlan plan;
    plan.batch_keys = manifest;
    plan.model_ref = model_key;
    plan.hyper = hyper;
    std::sort(plan.batch_keys.begin(), plan.batch_keys.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < plan.batch_keys.size(); ++i) {
        const std::int64_t id = plan.batch_keys[i].first;
        if (id != static_cast<std::int64_t>(i)) {
            std::ostringstream os;
            if (i > 0 && id == plan.batch_keys[i - 1].first) {
                os << "duplicate batch_id " << id << " in fan-out manifest";
            } else {
                os << "batch ids must be dense from 0; found " << id << " at position " << i;
            }
            throw PlanError(os.str());
        }
    }
    return plan;
}

std::string fanout_plan_to_json(const FanoutPlan& plan) {
    nlohmann::json j;
    j["model_ref"] = plan.model_ref;
    j["hyper"] = {{"lr", plan.hyper.lr}, {"loss", plan.hyper.loss}, {"optimizer", plan.hyper.optimizer}};
    j["branches"] = nlohmann::json::array();
    for (const auto& [batch_id, key] : plan.batch_keys) {
        j["branches"].push_back({{"batch_id", batch_id}, {"batch_key", key}});
    }
    return j.dump(2);
}

FanoutPlan fanout_plan_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("bad fan-out plan json: ") + e.what());
    }
    try {
        BatchManifest manifest;
        for (const auto& branch : j.at("branches")) {
            manifest.emplace_back(branch.at("batch_id").get<std::int64_t>(),
                                  branch.at("batch_key").get<std::string>());
        }
        Hyperparams hyper;
        hyper.lr = j.at("hyper").at("lr").get<double>();
        hyper.loss = j.at("hyper").at("loss").get<std::string>();
        hyper.optimizer = j.at("hyper").at("optimizer").get<std::string>();
        return build_fanout_plan(manifest, j.at("model_ref").get<std::string>(), hyper);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("bad fan-out plan json: ") + e.what());
    }
}

ExecutionResult execute(const FanoutPlan& plan, const ExecutorConfig& config, ObjectStore& store) {
    validate_config(config);
    if (plan.batch_keys.empty()) throw PlanError("empty fan-out plan");

    const bool serverless = config.mode == ExecMode::ServerlessParallel;
    const std::size_t branches = plan.batch_keys.size();
    const std::size_t workers = serverless ? std::min<std::size_t>(config.max_concurrency, branches) : 1;

    std::vector<InvocationRecord> records(branches);
    std::vector<std::string> gradient_keys(branches);

    std::atomic<std::size_t> next_branch{0};
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};

    const auto run_branch = [&](std::size_t idx) {
        const auto& [batch_id, batch_key] = plan.batch_keys[idx];
        InvocationRecord& record = records[idx];
        record.batch_id = batch_id;
        record.memory_mb = config.lambda_memory_mb;
        record.start = std::chrono::system_clock::now();
        const auto t0 = std::chrono::steady_clock::now();

        const int current = in_flight.fetch_add(1) + 1;
        int seen = peak.load();
        while (current > seen && !peak.compare_exchange_weak(seen, current)) {
        }

        std::string failure;
        for (int attempt = 0; attempt <= config.retry_count; ++attempt) {
            try {
                if (serverless && config.invocation_overhead_ms > 0.0) {
                    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(config.invocation_overhead_ms));
                }
                const ModelParams model = deserialize_model(store.get(plan.model_ref));
                const Batch batch = load_batch(store, batch_key);
                const GradientVector grad = compute_batch_gradient(model, batch);
                if (config.simulated_speed_factor > 0.0) {
                    std::this_thread::sleep_for(std::chrono::duration<double>(config.simulated_speed_factor));
                }
                gradient_keys[idx] = store.put(serialize_gradient(grad));
                failure.clear();
                break;
            } catch (const std::exception& e) {
                failure = e.what();
            }
        }
        in_flight.fetch_sub(1);

        record.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        record.billed_cost_usd = serverless ? record.duration_s * config.lambda_rate_usd_per_s : 0.0;
        record.ok = failure.empty();
        record.failure_reason = failure;
    };

    const auto t_start = std::chrono::steady_clock::now();
    if (workers == 1) {
        for (std::size_t i = 0; i < branches; ++i) run_branch(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t idx = next_branch.fetch_add(1);
                    if (idx >= branches) return;
                    run_branch(idx);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    ExecutionResult result;
    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.peak_concurrency = peak.load();

    std::vector<std::int64_t> failed;
    for (const InvocationRecord& record : records) {
        result.busy_time_s += record.duration_s;
        if (!record.ok) failed.push_back(record.batch_id);
    }
    if (!failed.empty()) {
        std::ostringstream os;
        os << "fan-out failed for batch ids:";
        for (std::int64_t id : failed) os << " " << id;
        os << " (first error: " << records[static_cast<std::size_t>(failed.front())].failure_reason << ")";
        throw ExecutionError(os.str());
    }

    result.records = std::move(records);
    result.gradients.reserve(branches);
    for (const std::string& key : gradient_keys) {
        result.gradients.push_back(deserialize_gradient(store.get(key)));
    }
    return result;
}

double total_lambda_cost(const std::vector<InvocationRecord>& records) {
    double total = 0.0;
    for (const InvocationRecord& record : records) total += record.billed_cost_usd;
    return total;
}

}  // namespace p2pfaas
