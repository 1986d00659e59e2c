#include "p2pfaas/serialization.hpp"

#include "p2pfaas/errors.hpp"

namespace p2pfaas {

void ByteReader::need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw DecodeError("truncated payload");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
}

double ByteReader::f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::span<const std::byte> ByteReader::bytes(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

void ByteReader::expect_end() const {
    if (pos_ != data_.size()) throw DecodeError("trailing bytes after payload");
}

std::vector<std::byte> serialize_batch(const Batch& batch) {
    ByteWriter w;
    w.i64(batch.batch_id);
    w.u32(static_cast<std::uint32_t>(batch.rows()));
    w.u32(static_cast<std::uint32_t>(batch.feature_dim));
    for (double v : batch.features) w.f64(v);
    for (std::int32_t y : batch.labels) w.i32(y);
    return w.take();
}

Batch deserialize_batch(std::span<const std::byte> blob) {
    ByteReader r(blob);
    Batch batch;
    batch.batch_id = r.i64();
    const std::uint32_t rows = r.u32();
    batch.feature_dim = static_cast<int>(r.u32());
    const std::size_t n_features = static_cast<std::size_t>(rows) * static_cast<std::size_t>(batch.feature_dim);
    batch.features.resize(n_features);
    for (double& v : batch.features) v = r.f64();
    batch.labels.resize(rows);
    for (std::int32_t& y : batch.labels) y = r.i32();
    r.expect_end();
    return batch;
}

std::vector<std::byte> serialize_gradient(const GradientVector& grad) {
    ByteWriter w;
    w.i64(grad.source_version);
    w.i64(grad.batch_count);
    w.u64(grad.values.size());
    for (double v : grad.values) w.f64(v);
    return w.take();
}

GradientVector deserialize_gradient(std::span<const std::byte> blob) {
    ByteReader r(blob);
    GradientVector grad;
    grad.source_version = r.i64();
    grad.batch_count = r.i64();
    const std::uint64_t len = r.u64();
    grad.values.resize(len);
    for (double& v : grad.values) v = r.f64();
    r.expect_end();
    return grad;
}

std::vector<std::byte> serialize_model(const ModelParams& model) {
    ByteWriter w;
    w.i64(model.version);
    w.u32(static_cast<std::uint32_t>(model.arch.layer_sizes.size()));
    for (int s : model.arch.layer_sizes) w.i32(s);
    w.u64(model.values.size());
    for (double v : model.values) w.f64(v);
    return w.take();
}

ModelParams deserialize_model(std::span<const std::byte> blob) {
    ByteReader r(blob);
    ModelParams model;
    model.version = r.i64();
    const std::uint32_t n_sizes = r.u32();
    model.arch.layer_sizes.resize(n_sizes);
    for (int& s : model.arch.layer_sizes) s = r.i32();
    const std::uint64_t len = r.u64();
    model.values.resize(len);
    for (double& v : model.values) v = r.f64();
    r.expect_end();
    if (model.arch.layer_sizes.size() < 2 || model.values.size() != model.arch.param_count()) {
        throw DecodeError("model blob inconsistent with architecture");
    }
    return model;
}

}  // namespace p2pfaas
