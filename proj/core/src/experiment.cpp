#include "p2pfaas/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "p2pfaas/log.hpp"
#include "p2pfaas/util.hpp"

namespace p2pfaas {

namespace {

std::string sanitize_token(const std::string& value) {
    std::string out;
    for (char c : value) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    out << content;
}

std::string format_trace_rows(const std::string& run_id, int rank, const std::vector<EpochTrace>& traces,
                              const std::string& stop_reason) {
    std::ostringstream os;
    for (const EpochTrace& t : traces) {
        os << run_id << "," << rank << "," << t.epoch << "," << std::setprecision(9) << t.compute_s << "," << t.send_s
           << "," << t.receive_s << "," << t.update_s << "," << t.convergence_s << "," << std::setprecision(17)
           << t.loss << "," << t.accuracy << "," << t.lr << "," << t.bytes_sent << "," << t.bytes_received << ","
           << stop_reason << "\n";
    }
    return os.str();
}

CostReport cost_report_for_peer(const RunConfig& config, const PeerResult& peer) {
    CostReport report;
    const double compute_time =
        std::accumulate(peer.traces.begin(), peer.traces.end(), 0.0,
                        [](double acc, const EpochTrace& t) { return acc + t.compute_s; });
    const std::int64_t epochs = static_cast<std::int64_t>(peer.traces.size());
    const std::int64_t num_batches =
        epochs > 0 ? static_cast<std::int64_t>(peer.invocations.size()) / epochs : 0;

    report.inputs.num_batches = std::max<std::int64_t>(num_batches, 1);
    report.inputs.lambda_rate_usd_per_s = config.executor.lambda_rate_usd_per_s;
    report.inputs.ec2_rate_usd_per_s = config.executor.instance_rate_usd_per_s;
    report.inputs.computation_time_s = compute_time;
    report.inputs.lambda_memory_mb = config.executor.lambda_memory_mb;
    report.inputs.batch_size = config.batch_size;

    if (config.executor.mode == ExecMode::ServerlessParallel) {
        report.architecture = CostArchitecture::Serverless;
        report.cost_per_peer_usd = serverless_cost(report.inputs);
        report.measured_invocation_cost_usd = total_lambda_cost(peer.invocations);
    } else {
        report.architecture = CostArchitecture::Instance;
        report.cost_per_peer_usd = instance_cost(report.inputs.ec2_rate_usd_per_s, compute_time);
    }
    return report;
}

std::string render_summary(const RunConfig& config, const RunArtifacts& artifacts) {
    std::ostringstream os;
    os << "run " << artifacts.run_id << "\n";
    os << "dataset: " << config.dataset_kind << " preprocessing=";
    switch (config.preprocessing) {
        case Preprocessing::None:
            os << "none";
            break;
        case Preprocessing::MinMax:
            os << "min-max";
            break;
        case Preprocessing::Standardize:
            os << "standardize";
            break;
    }
    os << "\n";
    os << "peers=" << config.peers << " batch_size=" << config.batch_size << " epochs<=" << config.epochs
       << " lr=" << config.lr << " mode=" << to_string(config.mode) << " encoding=" << to_string(config.encoding)
       << "\n\n";

    os << "per-peer results\n";
    for (std::size_t rank = 0; rank < artifacts.peers.size(); ++rank) {
        const PeerResult& peer = artifacts.peers[rank];
        const EpochTrace& last = peer.traces.back();
        os << "  rank " << rank << ": epochs=" << peer.traces.size() << " stop=" << to_string(peer.stop_reason)
           << std::setprecision(6) << " loss=" << last.loss << " accuracy=" << last.accuracy << "\n";
    }

    os << "\nstage summary (rank 0 means across epochs)\n";
    for (const MetricsRecorder::StageSummary& stage : artifacts.peers.front().stage_summaries) {
        os << "  " << std::left << std::setw(24) << stage.stage << std::right << " samples=" << stage.samples
           << std::setprecision(6) << " mean_time_s=" << stage.mean_time_s
           << " peak_rss_mb=" << static_cast<double>(stage.peak_memory_bytes) / (1024.0 * 1024.0)
           << " cpu_proxy=" << stage.mean_cpu_proxy << "\n";
    }

    os << "\ncost per peer (gradient computation)\n";
    for (std::size_t rank = 0; rank < artifacts.cost_reports.size(); ++rank) {
        const CostReport& report = artifacts.cost_reports[rank];
        os << "  rank " << rank << " ["
           << (report.architecture == CostArchitecture::Serverless ? "serverless" : "instance")
           << "]: " << std::setprecision(8) << "rate-model cost: " << report.cost_per_peer_usd << " USD";
        if (report.measured_invocation_cost_usd) {
            os << "; measured per-invocation billing: " << *report.measured_invocation_cost_usd << " USD";
        }
        os << " (compute " << std::setprecision(4) << report.inputs.computation_time_s << " s, "
           << report.inputs.num_batches << " batches/epoch)\n";
    }
    return os.str();
}

}  // namespace

std::string run_id_for(const RunConfig& config) {
    RunConfig keyed = config;
    keyed.out_dir = "";  // the id names the experiment, not its landing spot
    const std::string text = serialize_run_config(keyed);
    const std::uint64_t hash = fnv1a64(std::as_bytes(std::span<const char>(text.data(), text.size())));
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash;
    return os.str();
}

RunArtifacts run_experiment(const RunConfig& config) {
    config.validate();

    RunArtifacts artifacts;
    artifacts.run_id = run_id_for(config);
    artifacts.out_dir = config.out_dir;
    std::filesystem::create_directories(artifacts.out_dir);

    logging::info("run " + artifacts.run_id + ": generating dataset");
    const Dataset dataset = generate(config.dataset_spec());
    const Architecture arch = config.architecture(dataset.feature_dim, dataset.num_classes);
    if (static_cast<std::int64_t>(dataset.train.size()) <
        static_cast<std::int64_t>(config.peers) * config.batch_size) {
        throw ValidationError("training split smaller than peers * batch_size");
    }

    ObjectStore store(artifacts.out_dir / "store");
    Broker broker(config.peers, store, config.broker);

    std::vector<PeerResult> results(static_cast<std::size_t>(config.peers));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.peers));
    {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(config.peers));
        for (int rank = 0; rank < config.peers; ++rank) {
            threads.emplace_back([&, rank] {
                PeerConfig peer;
                peer.rank = rank;
                peer.peers = config.peers;
                peer.max_epochs = config.epochs;
                peer.batch_size = config.batch_size;
                peer.lr = config.lr;
                peer.mode = config.mode;
                peer.encoding = config.encoding;
                peer.executor = config.executor;
                peer.convergence = config.convergence;
                peer.arch = arch;
                peer.seed = config.seed;
                try {
                    results[static_cast<std::size_t>(rank)] =
                        run_peer(peer, dataset.train, dataset.validation, broker, store);
                } catch (...) {
                    failures[static_cast<std::size_t>(rank)] = std::current_exception();
                }
            });
        }
        for (std::thread& t : threads) t.join();
    }

    // Config snapshot is always written; traces include whatever completed.
    artifacts.config_snapshot = artifacts.out_dir / "config.cfg";
    write_file(artifacts.config_snapshot, serialize_run_config(config));

    std::ostringstream trace;
    trace << kTraceCsvHeader << "\n";
    for (int rank = 0; rank < config.peers; ++rank) {
        const std::size_t r = static_cast<std::size_t>(rank);
        if (failures[r]) {
            try {
                std::rethrow_exception(failures[r]);
            } catch (const PeerAbortError& abort) {
                trace << format_trace_rows(artifacts.run_id, rank, abort.partial_traces, "aborted");
            } catch (...) {
            }
        } else {
            trace << format_trace_rows(artifacts.run_id, rank, results[r].traces, to_string(results[r].stop_reason));
        }
    }
    artifacts.trace_csv = artifacts.out_dir / "trace.csv";
    write_file(artifacts.trace_csv, trace.str());

    for (int rank = 0; rank < config.peers; ++rank) {
        if (failures[static_cast<std::size_t>(rank)]) {
            logging::error("run " + artifacts.run_id + ": rank " + std::to_string(rank) + " aborted");
            std::rethrow_exception(failures[static_cast<std::size_t>(rank)]);
        }
    }

    artifacts.peers = std::move(results);
    for (const PeerResult& peer : artifacts.peers) {
        artifacts.cost_reports.push_back(cost_report_for_peer(config, peer));
    }

    std::ostringstream cost;
    cost << "run_id,rank,architecture,batch_size,num_batches,lambda_memory_mb,computation_time_s,rate_model_cost_usd,"
            "measured_invocation_cost_usd\n";
    for (std::size_t rank = 0; rank < artifacts.cost_reports.size(); ++rank) {
        const CostReport& report = artifacts.cost_reports[rank];
        cost << artifacts.run_id << "," << rank << ","
             << (report.architecture == CostArchitecture::Serverless ? "serverless" : "instance") << ","
             << report.inputs.batch_size << "," << report.inputs.num_batches << "," << report.inputs.lambda_memory_mb
             << "," << std::setprecision(9) << report.inputs.computation_time_s << "," << std::setprecision(12)
             << report.cost_per_peer_usd << ",";
        if (report.measured_invocation_cost_usd) cost << *report.measured_invocation_cost_usd;
        cost << "\n";
    }
    artifacts.cost_csv = artifacts.out_dir / "cost.csv";
    write_file(artifacts.cost_csv, cost.str());

    std::ostringstream metrics;
    metrics << "run_id,rank,stage,samples,mean_time_s,peak_rss_bytes,cpu_proxy\n";
    for (std::size_t rank = 0; rank < artifacts.peers.size(); ++rank) {
        for (const MetricsRecorder::StageSummary& stage : artifacts.peers[rank].stage_summaries) {
            metrics << artifacts.run_id << "," << rank << "," << stage.stage << "," << stage.samples << ","
                    << std::setprecision(9) << stage.mean_time_s << "," << stage.peak_memory_bytes << ","
                    << stage.mean_cpu_proxy << "\n";
        }
    }
    artifacts.metrics_csv = artifacts.out_dir / "metrics.csv";
    write_file(artifacts.metrics_csv, metrics.str());

    artifacts.final_model_checksum = model_checksum(artifacts.peers.front().model);

    artifacts.summary_path = artifacts.out_dir / "summary.txt";
    write_file(artifacts.summary_path, render_summary(config, artifacts));
    logging::info("run " + artifacts.run_id + ": complete");
    return artifacts;
}

SweepArtifacts sweep_experiment(const RunConfig& base, const std::string& axis,
                                const std::vector<std::string>& values) {
    if (axis != "batch_size" && axis != "peers" && axis != "encoding" && axis != "mode") {
        throw ValidationError("sweep axis must be one of batch_size, peers, encoding, mode");
    }
    if (values.empty()) throw ValidationError("sweep needs at least one value");

    SweepArtifacts artifacts;
    std::filesystem::create_directories(base.out_dir);

    for (const std::string& value : values) {
        RunConfig config = base;
        try {
            if (axis == "batch_size") {
                config.batch_size = std::stoi(value);
            } else if (axis == "peers") {
                config.peers = std::stoi(value);
            } else if (axis == "encoding") {
                config.encoding = parse_encoding(value);
            } else {
                config.mode = parse_mode(value);
            }
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("bad sweep value '" + value + "' for axis " + axis);
        }
        config.out_dir = base.out_dir / (axis + "-" + sanitize_token(value));
        config.validate();

        logging::info("sweep " + axis + "=" + value);
        RunArtifacts run = run_experiment(config);

        SweepRow row;
        row.value = value;
        const double peers = static_cast<double>(run.peers.size());
        for (std::size_t rank = 0; rank < run.peers.size(); ++rank) {
            const PeerResult& peer = run.peers[rank];
            double compute = 0.0;
            double comm = 0.0;
            double bytes = 0.0;
            for (const EpochTrace& t : peer.traces) {
                compute += t.compute_s;
                comm += t.send_s + t.receive_s;
                bytes += static_cast<double>(t.bytes_sent + t.bytes_received);
            }
            row.compute_time_s += compute / peers;
            row.comm_time_s += comm / peers;
            row.cost_usd += run.cost_reports[rank].cost_per_peer_usd / peers;
            row.accuracy += peer.traces.back().accuracy / peers;
            row.comm_bytes_per_peer += bytes / peers;
        }
        artifacts.rows.push_back(row);
        artifacts.runs.push_back(std::move(run));
    }

    std::ostringstream csv;
    csv << "value,compute_time,comm_time,cost,accuracy\n";
    for (const SweepRow& row : artifacts.rows) {
        csv << row.value << "," << std::setprecision(9) << row.compute_time_s << "," << row.comm_time_s << ","
            << std::setprecision(12) << row.cost_usd << "," << row.accuracy << "\n";
    }
    artifacts.comparison_csv = base.out_dir / "comparison.csv";
    write_file(artifacts.comparison_csv, csv.str());
    return artifacts;
}

}  // namespace p2pfaas
