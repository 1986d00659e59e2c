#include "p2pfaas/util.hpp"

#include <cstring>

namespace p2pfaas {

std::uint64_t fnv1a64(std::span<const std::byte> data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (std::byte b : data) {
        hash ^= static_cast<std::uint64_t>(b);
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::uint64_t model_checksum(const ModelParams& model) {
    std::uint64_t hash = fnv1a64(std::as_bytes(std::span<const double>(model.values)));
    std::uint64_t version_bits = static_cast<std::uint64_t>(model.version);
    hash ^= version_bits * 0x9e3779b97f4a7c15ull;
    return hash;
}

}  // namespace p2pfaas
