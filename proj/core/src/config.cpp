#include "p2pfaas/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "p2pfaas/errors.hpp"

namespace p2pfaas {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config line " << line_number << " is not 'key = value': '" << line << "'";
            throw ValidationError(os.str());
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    template <typename Fn>
    void take(const std::string& key, Fn&& apply) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return;
        try {
            apply(it->second);
        } catch (const std::exception&) {
            bad_.push_back(key + " = " + it->second);
        }
        kv_.erase(it);
    }

    void finish() {
        for (const auto& [key, value] : kv_) bad_.push_back(key + " (unknown key)");
        if (!bad_.empty()) {
            std::ostringstream os;
            os << "invalid config keys:";
            for (const std::string& k : bad_) os << " [" << k << "]";
            throw ValidationError(os.str());
        }
    }

private:
    std::map<std::string, std::string> kv_;
    std::vector<std::string> bad_;
};

int to_int(const std::string& s) {
    std::size_t consumed = 0;
    const int v = std::stoi(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
}

std::int64_t to_i64(const std::string& s) {
    std::size_t consumed = 0;
    const long long v = std::stoll(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::size_t consumed = 0;
    const unsigned long long v = std::stoull(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
}

double to_double(const std::string& s) {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
}

std::vector<int> to_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(trim(item)));
    if (out.empty()) throw std::invalid_argument(s);
    return out;
}

Preprocessing parse_preprocessing(const std::string& token) {
    if (token == "none") return Preprocessing::None;
    if (token == "min-max") return Preprocessing::MinMax;
    if (token == "standardize") return Preprocessing::Standardize;
    throw std::invalid_argument(token);
}

std::string to_string(Preprocessing p) {
    switch (p) {
        case Preprocessing::None:
            return "none";
        case Preprocessing::MinMax:
            return "min-max";
        case Preprocessing::Standardize:
            return "standardize";
    }
    return "none";
}

ExecMode parse_exec_mode(const std::string& token) {
    if (token == "instance-sequential" || token == "instance") return ExecMode::InstanceSequential;
    if (token == "serverless-parallel" || token == "serverless") return ExecMode::ServerlessParallel;
    throw std::invalid_argument(token);
}

std::string to_string(ExecMode mode) {
    return mode == ExecMode::InstanceSequential ? "instance-sequential" : "serverless-parallel";
}

}  // namespace

TrainingMode parse_mode(const std::string& token) {
    if (token == "sync" || token == "synchronous") return TrainingMode::Synchronous;
    if (token == "async" || token == "asynchronous") return TrainingMode::Asynchronous;
    throw std::invalid_argument(token);
}

std::string to_string(TrainingMode mode) {
    return mode == TrainingMode::Synchronous ? "sync" : "async";
}

EncodingSpec parse_encoding(const std::string& token) {
    if (token == "raw-f64" || token == "raw") return EncodingSpec{GradientEncoding::RawF64, 16};
    if (token.starts_with("qsgd(") && token.ends_with(")")) {
        const int levels = to_int(token.substr(5, token.size() - 6));
        if (levels < 1) throw std::invalid_argument(token);
        return EncodingSpec{GradientEncoding::Qsgd, static_cast<std::uint32_t>(levels)};
    }
    if (token == "qsgd") return EncodingSpec{GradientEncoding::Qsgd, 16};
    throw std::invalid_argument(token);
}

std::string to_string(const EncodingSpec& encoding) {
    if (encoding.kind == GradientEncoding::RawF64) return "raw-f64";
    std::ostringstream os;
    os << "qsgd(" << encoding.qsgd_levels << ")";
    return os.str();
}

DatasetSpec RunConfig::dataset_spec() const {
    DatasetSpec spec;
    spec.preprocessing = preprocessing;
    if (dataset_kind == "synthetic-blobs") {
        spec.source = SyntheticBlobsSpec{classes, features, samples, separation, seed};
    } else {
        spec.source = CsvFileSpec{csv_path, label_column};
    }
    return spec;
}

Architecture RunConfig::architecture(int feature_dim, int num_classes) const {
    if (model_kind == "logistic-regression") {
        return Architecture::logistic_regression(feature_dim, num_classes);
    }
    std::vector<int> sizes;
    sizes.push_back(feature_dim);
    sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
    sizes.push_back(num_classes);
    return Architecture::mlp(std::move(sizes));
}

void RunConfig::validate() const {
    std::vector<std::string> bad;
    if (dataset_kind != "synthetic-blobs" && dataset_kind != "csv-file") bad.push_back("dataset.kind");
    if (dataset_kind == "synthetic-blobs") {
        if (classes < 2) bad.push_back("dataset.classes");
        if (features < 1) bad.push_back("dataset.features");
        if (samples < 2) bad.push_back("dataset.samples");
        if (!(separation > 0.0)) bad.push_back("dataset.separation");
    } else if (csv_path.empty()) {
        bad.push_back("dataset.csv_path");
    }
    if (model_kind != "logistic-regression" && model_kind != "mlp") bad.push_back("model");
    if (model_kind == "mlp") {
        if (hidden_layers.empty()) bad.push_back("model.hidden");
        for (int h : hidden_layers) {
            if (h < 1) {
                bad.push_back("model.hidden");
                break;
            }
        }
    }
    if (peers < 1) bad.push_back("peers");
    if (batch_size < 1) bad.push_back("batch_size");
    if (epochs < 1) bad.push_back("epochs");
    if (!(lr > 0.0)) bad.push_back("lr");
    if (dataset_kind == "synthetic-blobs" &&
        samples < static_cast<std::int64_t>(peers) * static_cast<std::int64_t>(batch_size)) {
        bad.push_back("dataset.samples (need at least peers * batch_size)");
    }
    if (executor.max_concurrency < 1) bad.push_back("executor.max_concurrency");
    if (executor.invocation_overhead_ms < 0.0) bad.push_back("executor.overhead_ms");
    if (executor.lambda_rate_usd_per_s < 0.0) bad.push_back("executor.lambda_rate_usd_per_s");
    if (executor.instance_rate_usd_per_s < 0.0) bad.push_back("executor.instance_rate_usd_per_s");
    if (executor.simulated_speed_factor < 0.0) bad.push_back("executor.speed_factor");
    if (executor.retry_count < 0) bad.push_back("executor.retries");
    try {
        convergence.validate();
    } catch (const std::exception&) {
        bad.push_back("convergence.*");
    }
    if (broker.message_size_limit_bytes <= kMessageHeaderBytes) bad.push_back("broker.message_limit_bytes");
    if (broker.consume_timeout_s <= 0.0) bad.push_back("broker.consume_timeout_s");
    if (broker.barrier_timeout_s <= 0.0) bad.push_back("broker.barrier_timeout_s");
    if (broker.bandwidth_bytes_per_s < 0.0) bad.push_back("broker.bandwidth_bytes_per_s");
    if (out_dir.empty()) bad.push_back("out_dir");

    if (!bad.empty()) {
        std::ostringstream os;
        os << "invalid config keys:";
        for (const std::string& k : bad) os << " [" << k << "]";
        throw ValidationError(os.str());
    }
}

RunConfig parse_run_config_text(const std::string& text) {
    ConfigReader reader(parse_key_values(text));
    RunConfig c;

    reader.take("dataset.kind", [&](const std::string& v) { c.dataset_kind = v; });
    reader.take("dataset.classes", [&](const std::string& v) { c.classes = to_int(v); });
    reader.take("dataset.features", [&](const std::string& v) { c.features = to_int(v); });
    reader.take("dataset.samples", [&](const std::string& v) { c.samples = to_i64(v); });
    reader.take("dataset.separation", [&](const std::string& v) { c.separation = to_double(v); });
    reader.take("dataset.preprocessing", [&](const std::string& v) { c.preprocessing = parse_preprocessing(v); });
    reader.take("dataset.csv_path", [&](const std::string& v) { c.csv_path = v; });
    reader.take("dataset.label_column", [&](const std::string& v) { c.label_column = v; });

    reader.take("model", [&](const std::string& v) { c.model_kind = v; });
    reader.take("model.hidden", [&](const std::string& v) { c.hidden_layers = to_int_list(v); });

    reader.take("peers", [&](const std::string& v) { c.peers = to_int(v); });
    reader.take("batch_size", [&](const std::string& v) { c.batch_size = to_int(v); });
    reader.take("epochs", [&](const std::string& v) { c.epochs = to_int(v); });
    reader.take("lr", [&](const std::string& v) { c.lr = to_double(v); });
    reader.take("mode", [&](const std::string& v) { c.mode = parse_mode(v); });
    reader.take("encoding", [&](const std::string& v) { c.encoding = parse_encoding(v); });
    reader.take("seed", [&](const std::string& v) { c.seed = to_u64(v); });

    reader.take("convergence.early_stop_patience",
                [&](const std::string& v) { c.convergence.early_stop_patience = to_int(v); });
    reader.take("convergence.min_delta", [&](const std::string& v) { c.convergence.min_delta = to_double(v); });
    reader.take("convergence.plateau_patience",
                [&](const std::string& v) { c.convergence.plateau_patience = to_int(v); });
    reader.take("convergence.plateau_factor",
                [&](const std::string& v) { c.convergence.plateau_factor = to_double(v); });
    reader.take("convergence.min_lr", [&](const std::string& v) { c.convergence.min_lr = to_double(v); });

    reader.take("executor.mode", [&](const std::string& v) { c.executor.mode = parse_exec_mode(v); });
    reader.take("executor.max_concurrency", [&](const std::string& v) { c.executor.max_concurrency = to_int(v); });
    reader.take("executor.overhead_ms", [&](const std::string& v) { c.executor.invocation_overhead_ms = to_double(v); });
    reader.take("executor.lambda_memory_mb", [&](const std::string& v) { c.executor.lambda_memory_mb = to_int(v); });
    reader.take("executor.lambda_rate_usd_per_s",
                [&](const std::string& v) { c.executor.lambda_rate_usd_per_s = to_double(v); });
    reader.take("executor.instance_rate_usd_per_s",
                [&](const std::string& v) { c.executor.instance_rate_usd_per_s = to_double(v); });
    reader.take("executor.speed_factor",
                [&](const std::string& v) { c.executor.simulated_speed_factor = to_double(v); });
    reader.take("executor.retries", [&](const std::string& v) { c.executor.retry_count = to_int(v); });

    reader.take("broker.message_limit_bytes",
                [&](const std::string& v) { c.broker.message_size_limit_bytes = to_u64(v); });
    reader.take("broker.bandwidth_bytes_per_s",
                [&](const std::string& v) { c.broker.bandwidth_bytes_per_s = to_double(v); });
    reader.take("broker.consume_timeout_s", [&](const std::string& v) { c.broker.consume_timeout_s = to_double(v); });
    reader.take("broker.barrier_timeout_s", [&](const std::string& v) { c.broker.barrier_timeout_s = to_double(v); });

    reader.take("out_dir", [&](const std::string& v) { c.out_dir = v; });

    reader.finish();
    c.validate();
    return c;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config_text(buffer.str());
}

std::string serialize_run_config(const RunConfig& c) {
    std::ostringstream os;
    os << "dataset.kind = " << c.dataset_kind << "\n";
    if (c.dataset_kind == "synthetic-blobs") {
        os << "dataset.classes = " << c.classes << "\n";
        os << "dataset.features = " << c.features << "\n";
        os << "dataset.samples = " << c.samples << "\n";
        os << "dataset.separation = " << c.separation << "\n";
    } else {
        os << "dataset.csv_path = " << c.csv_path.string() << "\n";
        os << "dataset.label_column = " << c.label_column << "\n";
    }
    os << "dataset.preprocessing = " << to_string(c.preprocessing) << "\n";
    os << "model = " << c.model_kind << "\n";
    if (c.model_kind == "mlp") {
        os << "model.hidden = ";
        for (std::size_t i = 0; i < c.hidden_layers.size(); ++i) {
            if (i) os << ",";
            os << c.hidden_layers[i];
        }
        os << "\n";
    }
    os << "peers = " << c.peers << "\n";
    os << "batch_size = " << c.batch_size << "\n";
    os << "epochs = " << c.epochs << "\n";
    os << "lr = " << c.lr << "\n";
    os << "mode = " << to_string(c.mode) << "\n";
    os << "encoding = " << to_string(c.encoding) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "convergence.early_stop_patience = " << c.convergence.early_stop_patience << "\n";
    os << "convergence.min_delta = " << c.convergence.min_delta << "\n";
    os << "convergence.plateau_patience = " << c.convergence.plateau_patience << "\n";
    os << "convergence.plateau_factor = " << c.convergence.plateau_factor << "\n";
    os << "convergence.min_lr = " << c.convergence.min_lr << "\n";
    os << "executor.mode = " << to_string(c.executor.mode) << "\n";
    os << "executor.max_concurrency = " << c.executor.max_concurrency << "\n";
    os << "executor.overhead_ms = " << c.executor.invocation_overhead_ms << "\n";
    os << "executor.lambda_memory_mb = " << c.executor.lambda_memory_mb << "\n";
    os << "executor.lambda_rate_usd_per_s = " << c.executor.lambda_rate_usd_per_s << "\n";
    os << "executor.instance_rate_usd_per_s = " << c.executor.instance_rate_usd_per_s << "\n";
    os << "executor.speed_factor = " << c.executor.simulated_speed_factor << "\n";
    os << "executor.retries = " << c.executor.retry_count << "\n";
    os << "broker.message_limit_bytes = " << c.broker.message_size_limit_bytes << "\n";
    os << "broker.bandwidth_bytes_per_s = " << c.broker.bandwidth_bytes_per_s << "\n";
    os << "broker.consume_timeout_s = " << c.broker.consume_timeout_s << "\n";
    os << "broker.barrier_timeout_s = " << c.broker.barrier_timeout_s << "\n";
    os << "out_dir = " << c.out_dir.string() << "\n";
    return os.str();
}

}  // namespace p2pfaas
