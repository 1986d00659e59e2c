#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "p2pfaas/model.hpp"
#include "p2pfaas/object_store.hpp"

namespace p2pfaas {

enum class GradientEncoding : std::uint8_t { RawF64 = 0, Qsgd = 1 };
enum class PayloadKind : std::uint8_t { Inline = 0, Reference = 1 };

struct EncodingSpec {
    GradientEncoding kind = GradientEncoding::RawF64;
    std::uint32_t qsgd_levels = 16;
};

// One parsed queue message. `payload` is either the encoded gradient bytes or
// a 36-char UUID resolving through the object store.
struct GradientMessage {
    std::uint32_t sender_rank = 0;
    std::uint32_t epoch = 0;
    GradientEncoding encoding = GradientEncoding::RawF64;
    PayloadKind payload_kind = PayloadKind::Inline;
    std::vector<std::byte> payload;
};

// Wire format: sender_rank u32 | epoch u32 | encoding u8 | payload-kind u8 |
// length u64 | payload bytes.
inline constexpr std::size_t kMessageHeaderBytes = 18;
std::vector<std::byte> serialize_message(const GradientMessage& msg);
GradientMessage deserialize_message(std::span<const std::byte> wire);

struct BrokerConfig {
    std::size_t message_size_limit_bytes = 100ull << 20;  // 100 MiB
    double consume_timeout_s = 60.0;
    double barrier_timeout_s = 60.0;
    // Simulated link bandwidth applied to publish and consume transfers;
    // 0 disables the delay.
    double bandwidth_bytes_per_s = 0.0;
};

struct BarrierEvent {
    enum class Kind { Arrive, Release } kind;
    int rank;
    std::int64_t epoch;
    std::uint64_t seq;  // global ordering across all barrier events
};

struct ConsumeResult {
    GradientVector gradient;       // source_version = message epoch
    std::int64_t epoch = 0;
    std::size_t bytes_transferred = 0;
};

// In-process gradient-exchange broker: one single-slot persistent queue per
// peer (publish replaces, consume never removes), an epoch-indexed
// synchronization barrier, and object-store indirection for payloads above
// the message size limit. Safe under concurrent use from all peer threads.
class Broker {
public:
    Broker(int peers, ObjectStore& store, BrokerConfig config = {});

    // Encodes (quantizing if requested), publishes to the rank's own queue
    // replacing any previous message, and returns the bytes transferred
    // (message plus referenced blob, if any). qsgd_seed feeds the stochastic
    // rounding when encoding.kind == Qsgd.
    std::size_t publish_gradient(int rank, std::int64_t epoch, const GradientVector& grad, const EncodingSpec& encoding,
                                 std::uint64_t qsgd_seed = 0);

    // Blocks until the target queue holds a message with epoch >= min_epoch
    // (pass nullopt to take the latest available message regardless of
    // epoch). The message is not removed. Rejects reading one's own queue.
    ConsumeResult consume_gradient(int reader_rank, int target_rank, std::optional<std::int64_t> min_epoch);

    // Registers the rank for the epoch's barrier and blocks until all peers
    // have arrived (ranks marked finished at an earlier epoch count as
    // arrived). Duplicate arrival is a protocol error.
    void barrier_arrive_and_wait(int rank, std::int64_t epoch);

    // Tombstone: the rank has stopped training after `epoch`. Later barriers
    // no longer wait for it and epoch-gated consumes fall back to its last
    // published message.
    void mark_finished(int rank, std::int64_t epoch);

    // Inspection hooks.
    std::optional<GradientMessage> peek(int rank) const;
    std::vector<BarrierEvent> barrier_events() const;
    int peers() const { return peers_; }
    const BrokerConfig& config() const { return config_; }

private:
    struct BarrierState {
        std::set<int> arrived;
        bool released = false;
    };

    // Condition wait against a steady-clock deadline, sliced through short
    // system-clock waits: pthread_cond_clockwait is invisible to some thread
    // sanitizers, and a wall-clock jump can skew at most one slice.
    bool wait_with_deadline(std::unique_lock<std::mutex>& lock, std::chrono::steady_clock::time_point deadline,
                            const std::function<bool()>& ready);

    void check_rank(int rank) const;
    bool barrier_complete_locked(const BarrierState& state, std::int64_t epoch) const;
    void release_barriers_locked();
    void bandwidth_delay(std::size_t bytes) const;

    int peers_;
    ObjectStore& store_;
    BrokerConfig config_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::vector<std::optional<GradientMessage>> queues_;
    std::map<std::int64_t, BarrierState> barriers_;
    std::map<int, std::int64_t> finished_;  // rank -> last completed epoch
    std::vector<BarrierEvent> events_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace p2pfaas
