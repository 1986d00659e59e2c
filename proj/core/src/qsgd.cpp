#include "p2pfaas/qsgd.hpp"

#include <cmath>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/rng.hpp"
#include "p2pfaas/serialization.hpp"

namespace p2pfaas {

unsigned qsgd_level_bits(std::uint32_t s) {
    unsigned bits = 1;
    while ((1ull << bits) < static_cast<std::uint64_t>(s) + 1) ++bits;
    return bits;
}

QuantizedGradient qsgd_encode(const GradientVector& grad, std::uint32_t s, std::uint64_t seed) {
    if (s < 1) throw ConfigError("qsgd level count must be >= 1");
    QuantizedGradient q;
    q.s = s;
    q.length = grad.values.size();
    q.signs.assign(q.length, 0);
    q.levels.assign(q.length, 0);

    double sum_sq = 0.0;
    for (double v : grad.values) {
        if (!std::isfinite(v)) throw NumericError("cannot quantize non-finite gradient");
        sum_sq += v * v;
    }
    q.norm = std::sqrt(sum_sq);
    if (q.norm == 0.0) return q;

    // Scramble the seed so near-identical seeds (e.g. per-epoch counters)
    // yield independent rounding streams.
    Rng rng(mix_seed(seed, 0x71736764ull));
    const double scale = static_cast<double>(s) / q.norm;
    for (std::size_t i = 0; i < q.length; ++i) {
        const double v = grad.values[i];
        q.signs[i] = v < 0.0 ? 1 : 0;
        const double u = std::fabs(v) * scale;
        double level = std::floor(u);
        if (rng.bernoulli(u - level)) level += 1.0;
        if (level > static_cast<double>(s)) level = static_cast<double>(s);  // sqrt rounding guard
        q.levels[i] = static_cast<std::uint32_t>(level);
    }
    return q;
}

GradientVector qsgd_decode(const QuantizedGradient& q) {
    if (q.signs.size() != q.length || q.levels.size() != q.length) {
        throw DecodeError("quantized gradient arrays do not match its length");
    }
    GradientVector grad;
    grad.values.resize(q.length);
    grad.source_version = 0;
    grad.batch_count = 1;
    const double unit = q.norm / static_cast<double>(q.s);
    for (std::size_t i = 0; i < q.length; ++i) {
        if (q.levels[i] > q.s) throw DecodeError("quantized level exceeds level count");
        const double magnitude = unit * static_cast<double>(q.levels[i]);
        grad.values[i] = q.signs[i] ? -magnitude : magnitude;
    }
    return grad;
}

std::size_t quantized_payload_size(std::size_t length, std::uint32_t s) {
    const unsigned bits = qsgd_level_bits(s);
    const std::size_t sign_bytes = (length + 7) / 8;
    const std::size_t level_bytes = (length * bits + 7) / 8;
    return 8 + 4 + 8 + sign_bytes + level_bytes;
}

std::vector<std::byte> serialize_quantized(const QuantizedGradient& q) {
    ByteWriter w;
    w.f64(q.norm);
    w.u32(q.s);
    w.u64(q.length);

    std::vector<std::byte> sign_bits((q.length + 7) / 8, std::byte{0});
    for (std::size_t i = 0; i < q.length; ++i) {
        if (q.signs[i]) sign_bits[i / 8] |= static_cast<std::byte>(1u << (i % 8));
    }
    w.bytes(sign_bits);

    const unsigned bits = qsgd_level_bits(q.s);
    std::vector<std::byte> level_bits((q.length * bits + 7) / 8, std::byte{0});
    std::size_t bit_pos = 0;
    for (std::size_t i = 0; i < q.length; ++i) {
        const std::uint32_t level = q.levels[i];
        for (unsigned b = 0; b < bits; ++b, ++bit_pos) {
            if (level & (1u << b)) level_bits[bit_pos / 8] |= static_cast<std::byte>(1u << (bit_pos % 8));
        }
    }
    w.bytes(level_bits);
    return w.take();
}

QuantizedGradient deserialize_quantized(std::span<const std::byte> blob) {
    ByteReader r(blob);
    QuantizedGradient q;
    q.norm = r.f64();
    q.s = r.u32();
    q.length = r.u64();
    if (q.s < 1) throw DecodeError("quantized payload has level count 0");
    if (!std::isfinite(q.norm) || q.norm < 0.0) throw DecodeError("quantized payload has invalid norm");

    const auto sign_bits = r.bytes((q.length + 7) / 8);
    q.signs.assign(q.length, 0);
    for (std::size_t i = 0; i < q.length; ++i) {
        q.signs[i] =
            (static_cast<std::uint8_t>(sign_bits[i / 8]) >> (i % 8)) & 1u;
    }

    const unsigned bits = qsgd_level_bits(q.s);
    const auto level_bits = r.bytes((q.length * bits + 7) / 8);
    q.levels.assign(q.length, 0);
    std::size_t bit_pos = 0;
    for (std::size_t i = 0; i < q.length; ++i) {
        std::uint32_t level = 0;
        for (unsigned b = 0; b < bits; ++b, ++bit_pos) {
            if ((static_cast<std::uint8_t>(level_bits[bit_pos / 8]) >> (bit_pos % 8)) & 1u) level |= 1u << b;
        }
        if (level > q.s) throw DecodeError("quantized level exceeds level count");
        q.levels[i] = level;
    }
    r.expect_end();
    return q;
}

}  // namespace p2pfaas
