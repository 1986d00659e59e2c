#include "p2pfaas/object_store.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "p2pfaas/errors.hpp"

namespace p2pfaas {

namespace {

// Canonical 8-4-4-4-12 v4 UUID from two random words.
std::string format_uuid(std::uint64_t hi, std::uint64_t lo) {
    hi = (hi & 0xffffffffffff0fffull) | 0x0000000000004000ull;  // version 4
    lo = (lo & 0x3fffffffffffffffull) | 0x8000000000000000ull;  // variant 10
    char buf[37];
    std::snprintf(buf, sizeof(buf), "%08x-%04x-%04x-%04x-%04x%08x", static_cast<unsigned>(hi >> 32),
                  static_cast<unsigned>((hi >> 16) & 0xffff), static_cast<unsigned>(hi & 0xffff),
                  static_cast<unsigned>(lo >> 48), static_cast<unsigned>((lo >> 32) & 0xffff),
                  static_cast<unsigned>(lo & 0xffffffff));
    return std::string(buf, 36);
}

bool valid_key(const std::string& key) {
    if (key.size() != 36) return false;
    for (std::size_t i = 0; i < key.size(); ++i) {
        const char c = key[i];
        if (i == 8 || i == 13 || i == 18 || i == 23) {
            if (c != '-') return false;
        } else if (!std::isxdigit(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return true;
}

}  // namespace

ObjectStore::ObjectStore(std::filesystem::path root) : root_(std::move(root)), key_rng_(std::random_device{}()) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw StoreError("cannot create object store root " + root_.string() + ": " + ec.message());
}

std::filesystem::path ObjectStore::path_for(const std::string& key) const {
    if (!valid_key(key)) throw StoreError("malformed object key: " + key);
    return root_ / key;
}

std::string ObjectStore::fresh_key() {
    std::lock_guard lock(mutex_);
    for (;;) {
        const std::string key = format_uuid(key_rng_(), key_rng_());
        if (!std::filesystem::exists(root_ / key)) return key;
    }
}

std::string ObjectStore::put(std::span<const std::byte> blob) {
    const std::string key = fresh_key();
    put(key, blob);
    return key;
}

void ObjectStore::put(const std::string& key, std::span<const std::byte> blob) {
    const std::filesystem::path dest = path_for(key);
    if (std::filesystem::exists(dest)) {
        const std::vector<std::byte> existing = get(key);
        if (existing.size() == blob.size() && std::equal(existing.begin(), existing.end(), blob.begin())) {
            return;  // idempotent re-put
        }
        throw StoreError("key " + key + " already holds a different blob");
    }
    std::filesystem::path tmp;
    {
        std::lock_guard lock(mutex_);
        tmp = root_ / (".tmp-" + std::to_string(temp_counter_++));
    }
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
        if (!out) throw StoreError("write failed for key " + key);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, dest, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw StoreError("cannot commit blob for key " + key + ": " + ec.message());
    }
}

std::vector<std::byte> ObjectStore::get(const std::string& key) const {
    const std::filesystem::path src = path_for(key);
    std::ifstream in(src, std::ios::binary | std::ios::ate);
    if (!in) throw NotFoundError("object key not found: " + key);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::byte> blob(static_cast<std::size_t>(size));
    if (size > 0) {
        in.read(reinterpret_cast<char*>(blob.data()), size);
        if (!in) throw StoreError("read failed for key " + key);
    }
    return blob;
}

bool ObjectStore::contains(const std::string& key) const {
    return std::filesystem::exists(path_for(key));
}

std::size_t ObjectStore::entry_count() const {
    std::size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
        if (entry.is_regular_file() && valid_key(entry.path().filename().string())) ++n;
    }
    return n;
}

}  // namespace p2pfaas
