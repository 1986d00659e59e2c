#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2pfaas/broker.hpp"
#include "p2pfaas/convergence.hpp"
#include "p2pfaas/dataset.hpp"
#include "p2pfaas/executor.hpp"
#include "p2pfaas/peer.hpp"

namespace p2pfaas {

// Full experiment description, parsed from a flat `key = value` text file
// ('#' starts a comment). One seed keys everything: blob sampling, splits,
// model init, shuffles, and quantization.
struct RunConfig {
    // dataset
    std::string dataset_kind = "synthetic-blobs";  // or "csv-file"
    int classes = 2;
    int features = 2;
    std::int64_t samples = 2000;
    double separation = 3.0;
    Preprocessing preprocessing = Preprocessing::None;
    std::filesystem::path csv_path;
    std::string label_column = "label";

    // model
    std::string model_kind = "logistic-regression";  // or "mlp"
    std::vector<int> hidden_layers;                  // mlp only

    // training
    int peers = 4;
    int batch_size = 64;
    int epochs = 30;
    double lr = 0.1;
    TrainingMode mode = TrainingMode::Synchronous;
    EncodingSpec encoding;
    ConvergencePolicy convergence;
    ExecutorConfig executor;
    BrokerConfig broker;
    std::uint64_t seed = 1;

    std::filesystem::path out_dir = "out";

    DatasetSpec dataset_spec() const;
    Architecture architecture(int feature_dim, int num_classes) const;

    // Throws ValidationError listing every offending key.
    void validate() const;
};

RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text);

// Round-trippable key=value rendering of the effective configuration.
std::string serialize_run_config(const RunConfig& config);

// "sync"/"async" and "raw-f64"/"raw"/"qsgd(s)" tokens.
TrainingMode parse_mode(const std::string& token);
EncodingSpec parse_encoding(const std::string& token);
std::string to_string(TrainingMode mode);
std::string to_string(const EncodingSpec& encoding);

}  // namespace p2pfaas
