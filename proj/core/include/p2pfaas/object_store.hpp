#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace p2pfaas {

// Local blob store standing in for a cloud bucket: a directory tree whose
// filenames are canonical UUID keys. Safe for concurrent put/get from many
// threads. put() never silently replaces a different blob under an existing
// key.
class ObjectStore {
public:
    explicit ObjectStore(std::filesystem::path root);

    // Stores the blob under a fresh UUID and returns the key.
    std::string put(std::span<const std::byte> blob);

    // Stores under an explicit key. Re-putting identical bytes is a no-op;
    // different bytes under an existing key throw StoreError.
    void put(const std::string& key, std::span<const std::byte> blob);

    std::vector<std::byte> get(const std::string& key) const;

    bool contains(const std::string& key) const;

    std::size_t entry_count() const;

    std::string fresh_key();

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path path_for(const std::string& key) const;

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::mt19937_64 key_rng_;
    std::uint64_t temp_counter_ = 0;
};

}  // namespace p2pfaas
