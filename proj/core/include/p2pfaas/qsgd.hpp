#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "p2pfaas/model.hpp"

namespace p2pfaas {

// Stochastically quantized gradient: each coordinate is represented by the
// shared l2 norm, a sign bit, and an integer level in [0, s].
struct QuantizedGradient {
    double norm = 0.0;
    std::vector<std::uint8_t> signs;   // 1 = negative
    std::vector<std::uint32_t> levels; // in [0, s]
    std::uint32_t s = 1;
    std::size_t length = 0;
};

// Unbiased stochastic quantization: u_i = |v_i|/norm * s, level_i = floor(u_i)
// + Bernoulli(frac(u_i)). Deterministic for a fixed seed; a zero vector maps
// to all-zero levels.
QuantizedGradient qsgd_encode(const GradientVector& grad, std::uint32_t s, std::uint64_t seed);

// values_i = norm * sign_i * level_i / s. Rejects levels above s.
GradientVector qsgd_decode(const QuantizedGradient& q);

// Bit-packed payload: norm f64 | s u32 | length u64 | signs 1 bit each |
// levels ceil(log2(s+1)) bits each.
std::vector<std::byte> serialize_quantized(const QuantizedGradient& q);
QuantizedGradient deserialize_quantized(std::span<const std::byte> blob);

// Packed payload size in bytes for a given vector length and level count.
std::size_t quantized_payload_size(std::size_t length, std::uint32_t s);

// Bits per level for level count s: ceil(log2(s+1)).
unsigned qsgd_level_bits(std::uint32_t s);

}  // namespace p2pfaas
