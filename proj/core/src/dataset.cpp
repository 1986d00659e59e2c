#include "p2pfaas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/rng.hpp"
#include "p2pfaas/serialization.hpp"

namespace p2pfaas {

namespace {

constexpr std::uint64_t kSplitTag = 0x73706c6974ull;  // train/validation shuffle stream

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

SampleSet generate_blobs(const SyntheticBlobsSpec& spec) {
    if (spec.classes < 2) throw ConfigError("synthetic-blobs needs at least 2 classes");
    if (spec.features < 1) throw ConfigError("synthetic-blobs needs at least 1 feature");
    if (spec.samples < spec.classes) throw ConfigError("synthetic-blobs needs at least one sample per class");

    // Class centers sit `separation` out along coordinate axes, wrapping to
    // farther shells once the axes are used up.
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.classes),
                                             std::vector<double>(static_cast<std::size_t>(spec.features), 0.0));
    for (int c = 0; c < spec.classes; ++c) {
        const int axis = c % spec.features;
        const int shell = 1 + c / spec.features;
        centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(axis)] = spec.separation * shell;
    }

    Rng rng(mix_seed(spec.seed, 0x626c6f62ull));
    SampleSet set;
    set.feature_dim = spec.features;
    set.num_classes = spec.classes;
    set.features.reserve(static_cast<std::size_t>(spec.samples) * spec.features);
    set.labels.reserve(static_cast<std::size_t>(spec.samples));
    for (std::int64_t i = 0; i < spec.samples; ++i) {
        const int label = static_cast<int>(i % spec.classes);
        const std::vector<double>& center = centers[static_cast<std::size_t>(label)];
        for (int d = 0; d < spec.features; ++d) {
            set.features.push_back(center[static_cast<std::size_t>(d)] + rng.normal());
        }
        set.labels.push_back(label);
    }
    return set;
}

SampleSet ingest_csv(const CsvFileSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) throw IngestionError("cannot open csv file: " + spec.path.string());

    std::string line;
    if (!std::getline(in, line)) throw IngestionError("csv file is empty: " + spec.path.string());
    const std::vector<std::string> header = split_csv_line(line);
    std::size_t label_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == spec.label_column) label_col = i;
    }
    if (label_col == header.size()) {
        throw IngestionError("label column '" + spec.label_column + "' not found in csv header");
    }

    SampleSet set;
    set.feature_dim = static_cast<int>(header.size() - 1);
    if (set.feature_dim < 1) throw IngestionError("csv has no feature columns");

    std::size_t row_number = 1;  // header was row 1
    std::int32_t max_label = -1;
    while (std::getline(in, line)) {
        ++row_number;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            std::ostringstream os;
            os << "csv row " << row_number << ": expected " << header.size() << " columns, got " << fields.size();
            throw IngestionError(os.str());
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::size_t consumed = 0;
            if (i == label_col) {
                long label = 0;
                try {
                    label = std::stol(fields[i], &consumed);
                } catch (const std::exception&) {
                    consumed = 0;
                }
                if (consumed != fields[i].size() || label < 0) {
                    std::ostringstream os;
                    os << "csv row " << row_number << ": bad label '" << fields[i] << "'";
                    throw IngestionError(os.str());
                }
                set.labels.push_back(static_cast<std::int32_t>(label));
                max_label = std::max(max_label, static_cast<std::int32_t>(label));
            } else {
                double value = 0.0;
                try {
                    value = std::stod(fields[i], &consumed);
                } catch (const std::exception&) {
                    consumed = 0;
                }
                if (consumed != fields[i].size() || !std::isfinite(value)) {
                    std::ostringstream os;
                    os << "csv row " << row_number << ": bad numeric value '" << fields[i] << "'";
                    throw IngestionError(os.str());
                }
                set.features.push_back(value);
            }
        }
    }
    if (set.labels.empty()) throw IngestionError("csv has no data rows: " + spec.path.string());
    if (max_label < 1) throw IngestionError("csv labels span fewer than 2 classes");
    set.num_classes = max_label + 1;
    return set;
}

void preprocess(SampleSet& set, Preprocessing mode) {
    if (mode == Preprocessing::None) return;
    const std::size_t n = set.size();
    const std::size_t d = static_cast<std::size_t>(set.feature_dim);
    for (std::size_t col = 0; col < d; ++col) {
        if (mode == Preprocessing::MinMax) {
            double lo = set.features[col];
            double hi = set.features[col];
            for (std::size_t row = 1; row < n; ++row) {
                const double v = set.features[row * d + col];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            const double range = hi - lo;
            for (std::size_t row = 0; row < n; ++row) {
                double& v = set.features[row * d + col];
                v = range > 0.0 ? (v - lo) / range : 0.0;
            }
        } else {
            double mean = 0.0;
            for (std::size_t row = 0; row < n; ++row) mean += set.features[row * d + col];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t row = 0; row < n; ++row) {
                const double diff = set.features[row * d + col] - mean;
                var += diff * diff;
            }
            var /= static_cast<double>(n);
            const double sigma = std::sqrt(var);
            for (std::size_t row = 0; row < n; ++row) {
                double& v = set.features[row * d + col];
                v = sigma > 0.0 ? (v - mean) / sigma : 0.0;
            }
        }
    }
}

SampleSet take_rows(const SampleSet& src, const std::vector<std::size_t>& rows) {
    SampleSet out;
    out.feature_dim = src.feature_dim;
    out.num_classes = src.num_classes;
    const std::size_t d = static_cast<std::size_t>(src.feature_dim);
    out.features.reserve(rows.size() * d);
    out.labels.reserve(rows.size());
    for (std::size_t row : rows) {
        for (std::size_t col = 0; col < d; ++col) out.features.push_back(src.features[row * d + col]);
        out.labels.push_back(src.labels[row]);
    }
    return out;
}

}  // namespace

Dataset generate(const DatasetSpec& spec) {
    SampleSet all = std::holds_alternative<SyntheticBlobsSpec>(spec.source)
                        ? generate_blobs(std::get<SyntheticBlobsSpec>(spec.source))
                        : ingest_csv(std::get<CsvFileSpec>(spec.source));
    preprocess(all, spec.preprocessing);

    const std::uint64_t split_seed = std::holds_alternative<SyntheticBlobsSpec>(spec.source)
                                         ? mix_seed(std::get<SyntheticBlobsSpec>(spec.source).seed, kSplitTag)
                                         : mix_seed(0, kSplitTag);
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(split_seed);
    rng.shuffle(order);

    const std::size_t n = all.size();
    const std::size_t n_val = n >= 10 ? n / 10 : (n >= 2 ? 1 : 0);
    const std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    const std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    Dataset ds;
    ds.train = take_rows(all, train_rows);
    ds.validation = take_rows(all, val_rows);
    ds.num_classes = all.num_classes;
    ds.feature_dim = all.feature_dim;
    return ds;
}

std::vector<Partition> partition_and_batch(const SampleSet& train, int peers, int batch_size, std::int64_t epoch,
                                           std::uint64_t base_seed) {
    if (peers < 1) throw ConfigError("peer count must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (static_cast<std::size_t>(peers) > train.size()) {
        std::ostringstream os;
        os << "peer count " << peers << " exceeds training set size " << train.size();
        throw ConfigError(os.str());
    }

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng global_rng(mix_seed(base_seed, static_cast<std::uint64_t>(epoch)));
    global_rng.shuffle(order);

    const std::size_t d = static_cast<std::size_t>(train.feature_dim);
    std::vector<Partition> partitions(static_cast<std::size_t>(peers));
    for (int r = 0; r < peers; ++r) {
        Partition& part = partitions[static_cast<std::size_t>(r)];
        part.peer_rank = r;
        part.epoch_shuffle_seed =
            mix_seed(base_seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(r) + 1);

        std::vector<std::size_t> mine;
        for (std::size_t j = static_cast<std::size_t>(r); j < order.size(); j += static_cast<std::size_t>(peers)) {
            mine.push_back(order[j]);
        }
        Rng part_rng(part.epoch_shuffle_seed);
        part_rng.shuffle(mine);
        part.sample_indices = mine;

        const std::size_t m = (mine.size() + static_cast<std::size_t>(batch_size) - 1) / batch_size;
        part.batches.reserve(m);
        for (std::size_t b = 0; b < m; ++b) {
            const std::size_t begin = b * static_cast<std::size_t>(batch_size);
            const std::size_t end = std::min(mine.size(), begin + static_cast<std::size_t>(batch_size));
            Batch batch;
            batch.batch_id = static_cast<std::int64_t>(b);
            batch.feature_dim = train.feature_dim;
            batch.features.reserve((end - begin) * d);
            batch.labels.reserve(end - begin);
            for (std::size_t j = begin; j < end; ++j) {
                const std::size_t row = mine[j];
                for (std::size_t col = 0; col < d; ++col) batch.features.push_back(train.features[row * d + col]);
                batch.labels.push_back(train.labels[row]);
            }
            part.batches.push_back(std::move(batch));
        }
    }
    return partitions;
}

BatchManifest store_batches(ObjectStore& store, const Partition& partition) {
    BatchManifest manifest;
    manifest.reserve(partition.batches.size());
    for (const Batch& batch : partition.batches) {
        const std::vector<std::byte> blob = serialize_batch(batch);
        manifest.emplace_back(batch.batch_id, store.put(blob));
    }
    return manifest;
}

Batch load_batch(const ObjectStore& store, const std::string& key) {
    return deserialize_batch(store.get(key));
}

}  // namespace p2pfaas
