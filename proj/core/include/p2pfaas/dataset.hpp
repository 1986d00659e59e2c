#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "p2pfaas/model.hpp"
#include "p2pfaas/object_store.hpp"

namespace p2pfaas {

enum class Preprocessing { None, MinMax, Standardize };

// Gaussian class clusters with unit variance; class centers are placed
// `separation` apart along coordinate axes, labels round-robin.
struct SyntheticBlobsSpec {
    int classes = 2;
    int features = 2;
    std::int64_t samples = 1000;
    double separation = 3.0;
    std::uint64_t seed = 0;
};

// Header row, numeric feature columns, one integer label column selected by
// name.
struct CsvFileSpec {
    std::filesystem::path path;
    std::string label_column;
};

struct DatasetSpec {
    std::variant<SyntheticBlobsSpec, CsvFileSpec> source = SyntheticBlobsSpec{};
    Preprocessing preprocessing = Preprocessing::None;
};

// Flat sample container (row-major features, one label per row).
struct SampleSet {
    std::vector<double> features;
    std::vector<std::int32_t> labels;
    int feature_dim = 0;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
};

struct Dataset {
    SampleSet train;
    SampleSet validation;
    int num_classes = 0;
    int feature_dim = 0;
};

// Generates (or ingests), preprocesses, then splits 90/10 train/validation
// after a seeded shuffle. Deterministic for a fixed spec.
Dataset generate(const DatasetSpec& spec);

struct Partition {
    int peer_rank = 0;
    std::vector<Batch> batches;
    std::uint64_t epoch_shuffle_seed = 0;
    // Original training-set row of each sample, in batch order (test hook for
    // the disjointness/coverage invariants).
    std::vector<std::size_t> sample_indices;
};

// Seeded shuffle keyed by (base_seed, epoch), round-robin split into P
// partitions, per-partition reshuffle, then cut into ceil(|D_r|/B) batches
// with dense batch_ids. Partition sizes differ by at most one.
std::vector<Partition> partition_and_batch(const SampleSet& train, int peers, int batch_size, std::int64_t epoch,
                                           std::uint64_t base_seed);

using BatchManifest = std::vector<std::pair<std::int64_t, std::string>>;  // (batch_id, key)

// Serializes every batch of the partition into the store under fresh UUIDs.
BatchManifest store_batches(ObjectStore& store, const Partition& partition);

Batch load_batch(const ObjectStore& store, const std::string& key);

}  // namespace p2pfaas
