#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "p2pfaas/model.hpp"

namespace p2pfaas {

// Little-endian binary writer/reader for the fixed wire and blob formats.
// The host is assumed little-endian for doubles (x86/ARM both qualify);
// integers are written byte-by-byte.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<std::byte>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }
    void bytes(std::span<const std::byte> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    std::vector<std::byte> take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    std::vector<std::byte> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64();
    std::span<const std::byte> bytes(std::size_t n);

    std::size_t remaining() const { return data_.size() - pos_; }
    // Throws DecodeError unless the reader consumed everything.
    void expect_end() const;

private:
    void need(std::size_t n) const;

    std::span<const std::byte> data_;
    std::size_t pos_ = 0;
};

// Batch blob: batch_id i64 | rows u32 | feature_dim u32 | features f64[rows*dim]
// | labels i32[rows]. Fixed so independent implementations interoperate.
std::vector<std::byte> serialize_batch(const Batch& batch);
Batch deserialize_batch(std::span<const std::byte> blob);

// Gradient blob: source_version i64 | batch_count i64 | length u64 | values f64[length].
std::vector<std::byte> serialize_gradient(const GradientVector& grad);
GradientVector deserialize_gradient(std::span<const std::byte> blob);

// Model blob: version i64 | n_layer_sizes u32 | sizes i32[...] | values f64[...].
std::vector<std::byte> serialize_model(const ModelParams& model);
ModelParams deserialize_model(std::span<const std::byte> blob);

}  // namespace p2pfaas
