#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "p2pfaas/model.hpp"

namespace p2pfaas {

std::uint64_t fnv1a64(std::span<const std::byte> data);

// Checksum over parameter bytes and version; bitwise-identical models agree.
std::uint64_t model_checksum(const ModelParams& model);

}  // namespace p2pfaas
