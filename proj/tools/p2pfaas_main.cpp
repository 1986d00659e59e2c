#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "p2pfaas/cost.hpp"
#include "p2pfaas/errors.hpp"
#include "p2pfaas/experiment.hpp"
#include "p2pfaas/log.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

p2pfaas::RunConfig load_config(const std::string& config_path, const std::optional<std::string>& out_dir,
                               const std::optional<std::uint64_t>& seed) {
    p2pfaas::RunConfig config = p2pfaas::parse_run_config(config_path);
    if (out_dir) config.out_dir = *out_dir;
    if (seed) config.seed = *seed;
    config.validate();
    return config;
}

std::vector<std::string> split_values(const std::string& csv) {
    std::vector<std::string> values;
    std::string current;
    for (char c : csv) {
        if (c == ',') {
            if (!current.empty()) values.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) values.push_back(current);
    return values;
}

int run_command(const std::string& config_path, const std::optional<std::string>& out_dir,
                const std::optional<std::uint64_t>& seed) {
    const p2pfaas::RunConfig config = load_config(config_path, out_dir, seed);
    const p2pfaas::RunArtifacts artifacts = p2pfaas::run_experiment(config);
    std::cout << "run " << artifacts.run_id << " complete\n";
    std::cout << "  trace:   " << artifacts.trace_csv.string() << "\n";
    std::cout << "  cost:    " << artifacts.cost_csv.string() << "\n";
    std::cout << "  summary: " << artifacts.summary_path.string() << "\n";
    for (std::size_t rank = 0; rank < artifacts.peers.size(); ++rank) {
        const auto& last = artifacts.peers[rank].traces.back();
        std::cout << "  rank " << rank << ": " << artifacts.peers[rank].traces.size() << " epochs, loss " << last.loss
                  << ", accuracy " << last.accuracy << ", stop " << p2pfaas::to_string(artifacts.peers[rank].stop_reason)
                  << "\n";
    }
    return kExitOk;
}

int sweep_command(const std::string& config_path, const std::string& axis, const std::string& values_csv,
                  const std::optional<std::string>& out_dir, const std::optional<std::uint64_t>& seed) {
    const p2pfaas::RunConfig base = load_config(config_path, out_dir, seed);
    const std::vector<std::string> values = split_values(values_csv);
    const p2pfaas::SweepArtifacts sweep = p2pfaas::sweep_experiment(base, axis, values);
    std::cout << "sweep over " << axis << " complete: " << sweep.comparison_csv.string() << "\n";
    for (const p2pfaas::SweepRow& row : sweep.rows) {
        std::cout << "  " << axis << "=" << row.value << ": compute " << row.compute_time_s << " s, comm "
                  << row.comm_time_s << " s, cost " << row.cost_usd << " USD, accuracy " << row.accuracy << "\n";
    }
    return kExitOk;
}

int paper_tables_command() {
    std::cout << p2pfaas::render_reference_cost_tables();
    const auto checks = p2pfaas::check_reference_cost_tables();
    int mismatches = 0;
    for (const auto& check : checks) {
        if (!check.ok) ++mismatches;
    }
    if (mismatches > 0) {
        std::cerr << "error: " << mismatches << " cost cell(s) differ from the published values beyond 0.0001 USD\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"p2pfaas: peer-to-peer training simulator with serverless gradient offload"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::string axis;
    std::string values_csv;

    CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", config_path, "path to the run configuration")->required();
    run->add_option("--out", out_dir, "output directory (overrides out_dir)");
    run->add_option("--seed", seed, "seed override");

    CLI::App* sweep = app.add_subcommand("sweep", "run one experiment per value of an axis");
    sweep->add_option("--config", config_path, "path to the base configuration")->required();
    sweep->add_option("--axis", axis, "one of batch_size, peers, encoding, mode")->required();
    sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
    sweep->add_option("--out", out_dir, "output directory (overrides out_dir)");
    sweep->add_option("--seed", seed, "seed override");

    CLI::App* tables = app.add_subcommand("paper-tables", "recompute the published cost tables and check every cell");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, out_dir, seed);
        if (sweep->parsed()) return sweep_command(config_path, axis, values_csv, out_dir, seed);
        if (tables->parsed()) return paper_tables_command();
    } catch (const p2pfaas::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const p2pfaas::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}
