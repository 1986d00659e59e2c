#include "p2pfaas/broker.hpp"

#include <chrono>
#include <sstream>
#include <thread>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/qsgd.hpp"
#include "p2pfaas/serialization.hpp"

namespace p2pfaas {

namespace {

std::vector<std::byte> encode_payload(const GradientVector& grad, const EncodingSpec& encoding,
                                      std::uint64_t qsgd_seed) {
    if (encoding.kind == GradientEncoding::RawF64) {
        ByteWriter w;
        for (double v : grad.values) w.f64(v);
        return w.take();
    }
    return serialize_quantized(qsgd_encode(grad, encoding.qsgd_levels, qsgd_seed));
}

GradientVector decode_payload(GradientEncoding encoding, std::span<const std::byte> payload, std::int64_t epoch) {
    GradientVector grad;
    if (encoding == GradientEncoding::RawF64) {
        if (payload.size() % 8 != 0) throw DecodeError("raw gradient payload not a multiple of 8 bytes");
        ByteReader r(payload);
        grad.values.resize(payload.size() / 8);
        for (double& v : grad.values) v = r.f64();
    } else {
        grad = qsgd_decode(deserialize_quantized(payload));
    }
    grad.source_version = epoch;
    grad.batch_count = 1;
    return grad;
}

}  // namespace

std::vector<std::byte> serialize_message(const GradientMessage& msg) {
    ByteWriter w;
    w.u32(msg.sender_rank);
    w.u32(msg.epoch);
    w.u8(static_cast<std::uint8_t>(msg.encoding));
    w.u8(static_cast<std::uint8_t>(msg.payload_kind));
    w.u64(msg.payload.size());
    w.bytes(msg.payload);
    return w.take();
}

GradientMessage deserialize_message(std::span<const std::byte> wire) {
    ByteReader r(wire);
    GradientMessage msg;
    msg.sender_rank = r.u32();
    msg.epoch = r.u32();
    const std::uint8_t enc = r.u8();
    const std::uint8_t kind = r.u8();
    if (enc > 1) throw DecodeError("unknown gradient encoding");
    if (kind > 1) throw DecodeError("unknown payload kind");
    msg.encoding = static_cast<GradientEncoding>(enc);
    msg.payload_kind = static_cast<PayloadKind>(kind);
    const std::uint64_t len = r.u64();
    const auto payload = r.bytes(len);
    msg.payload.assign(payload.begin(), payload.end());
    r.expect_end();
    return msg;
}

Broker::Broker(int peers, ObjectStore& store, BrokerConfig config)
    : peers_(peers), store_(store), config_(config), queues_(static_cast<std::size_t>(peers)) {
    if (peers < 1) throw ConfigError("broker needs at least one peer");
}

bool Broker::wait_with_deadline(std::unique_lock<std::mutex>& lock, std::chrono::steady_clock::time_point deadline,
                                const std::function<bool()>& ready) {
    constexpr auto kSlice = std::chrono::milliseconds(50);
    while (!ready()) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) return false;
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        cv_.wait_until(lock, std::chrono::system_clock::now() + std::min(kSlice, remaining + std::chrono::milliseconds(1)));
    }
    return true;
}

void Broker::check_rank(int rank) const {
    if (rank < 0 || rank >= peers_) {
        std::ostringstream os;
        os << "rank " << rank << " outside [0, " << peers_ << ")";
        throw ProtocolError(os.str());
    }
}

void Broker::bandwidth_delay(std::size_t bytes) const {
    if (config_.bandwidth_bytes_per_s <= 0.0 || bytes == 0) return;
    const double seconds = static_cast<double>(bytes) / config_.bandwidth_bytes_per_s;
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

std::size_t Broker::publish_gradient(int rank, std::int64_t epoch, const GradientVector& grad,
                                     const EncodingSpec& encoding, std::uint64_t qsgd_seed) {
    check_rank(rank);
    if (epoch < 0) throw ProtocolError("negative epoch");

    GradientMessage msg;
    msg.sender_rank = static_cast<std::uint32_t>(rank);
    msg.epoch = static_cast<std::uint32_t>(epoch);
    msg.encoding = encoding.kind;

    std::vector<std::byte> payload = encode_payload(grad, encoding, qsgd_seed);
    std::size_t blob_bytes = 0;
    if (kMessageHeaderBytes + payload.size() > config_.message_size_limit_bytes) {
        const std::string key = store_.put(payload);
        blob_bytes = payload.size();
        msg.payload_kind = PayloadKind::Reference;
        msg.payload.resize(key.size());
        std::memcpy(msg.payload.data(), key.data(), key.size());
    } else {
        msg.payload_kind = PayloadKind::Inline;
        msg.payload = std::move(payload);
    }

    const std::size_t bytes = kMessageHeaderBytes + msg.payload.size() + blob_bytes;
    bandwidth_delay(bytes);
    {
        std::lock_guard lock(mutex_);
        queues_[static_cast<std::size_t>(rank)] = std::move(msg);  // replace-on-publish
    }
    cv_.notify_all();
    return bytes;
}

ConsumeResult Broker::consume_gradient(int reader_rank, int target_rank, std::optional<std::int64_t> min_epoch) {
    check_rank(reader_rank);
    check_rank(target_rank);
    if (reader_rank == target_rank) throw ProtocolError("peers do not consume their own queue");

    GradientMessage msg;
    {
        std::unique_lock lock(mutex_);
        const auto ready = [&] {
            const auto& slot = queues_[static_cast<std::size_t>(target_rank)];
            if (!slot.has_value()) return false;
            if (!min_epoch.has_value()) return true;
            if (static_cast<std::int64_t>(slot->epoch) >= *min_epoch) return true;
            // A finished sender will never publish again; use its last message.
            const auto fin = finished_.find(target_rank);
            return fin != finished_.end();
        };
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(config_.consume_timeout_s));
        if (!wait_with_deadline(lock, deadline, ready)) {
            std::ostringstream os;
            os << "timed out waiting for gradient from rank " << target_rank;
            if (min_epoch) os << " at epoch >= " << *min_epoch;
            throw TimeoutError(os.str());
        }
        msg = *queues_[static_cast<std::size_t>(target_rank)];  // copy; consume never removes
    }

    std::size_t bytes = kMessageHeaderBytes + msg.payload.size();
    std::span<const std::byte> payload(msg.payload);
    std::vector<std::byte> blob;
    if (msg.payload_kind == PayloadKind::Reference) {
        const std::string key(reinterpret_cast<const char*>(msg.payload.data()), msg.payload.size());
        blob = store_.get(key);
        bytes += blob.size();
        payload = blob;
    }
    bandwidth_delay(bytes);

    ConsumeResult result;
    result.epoch = static_cast<std::int64_t>(msg.epoch);
    result.bytes_transferred = bytes;
    result.gradient = decode_payload(msg.encoding, payload, result.epoch);
    return result;
}

bool Broker::barrier_complete_locked(const BarrierState& state, std::int64_t epoch) const {
    std::size_t present = state.arrived.size();
    for (const auto& [rank, last_epoch] : finished_) {
        if (last_epoch < epoch && !state.arrived.contains(rank)) ++present;
    }
    return present == static_cast<std::size_t>(peers_);
}

void Broker::release_barriers_locked() {
    bool released_any = false;
    for (auto& [epoch, state] : barriers_) {
        if (!state.released && barrier_complete_locked(state, epoch)) {
            state.released = true;
            for (int rank : state.arrived) {
                events_.push_back({BarrierEvent::Kind::Release, rank, epoch, next_seq_++});
            }
            released_any = true;
        }
    }
    if (released_any) cv_.notify_all();
}

void Broker::barrier_arrive_and_wait(int rank, std::int64_t epoch) {
    check_rank(rank);
    std::unique_lock lock(mutex_);
    BarrierState& state = barriers_[epoch];
    if (state.arrived.contains(rank)) {
        std::ostringstream os;
        os << "rank " << rank << " arrived twice at barrier for epoch " << epoch;
        throw ProtocolError(os.str());
    }
    state.arrived.insert(rank);
    events_.push_back({BarrierEvent::Kind::Arrive, rank, epoch, next_seq_++});
    release_barriers_locked();

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(config_.barrier_timeout_s));
    const bool ok = wait_with_deadline(lock, deadline, [&] {
        const auto it = barriers_.find(epoch);
        return it == barriers_.end() || it->second.released;  // missing means already collected
    });
    if (!ok) {
        std::ostringstream os;
        os << "barrier timeout at epoch " << epoch << "; missing ranks:";
        const BarrierState& now = barriers_.at(epoch);
        for (int r = 0; r < peers_; ++r) {
            const auto fin = finished_.find(r);
            const bool counted = now.arrived.contains(r) || (fin != finished_.end() && fin->second < epoch);
            if (!counted) os << " " << r;
        }
        throw TimeoutError(os.str());
    }

    // Garbage-collect released barriers for strictly older epochs.
    for (auto it = barriers_.begin(); it != barriers_.end();) {
        if (it->first < epoch && it->second.released) {
            it = barriers_.erase(it);
        } else {
            ++it;
        }
    }
}

void Broker::mark_finished(int rank, std::int64_t epoch) {
    check_rank(rank);
    std::lock_guard lock(mutex_);
    finished_[rank] = epoch;
    release_barriers_locked();
    cv_.notify_all();
}

std::optional<GradientMessage> Broker::peek(int rank) const {
    check_rank(rank);
    std::lock_guard lock(mutex_);
    return queues_[static_cast<std::size_t>(rank)];
}

std::vector<BarrierEvent> Broker::barrier_events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

}  // namespace p2pfaas
