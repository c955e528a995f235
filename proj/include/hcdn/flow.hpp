#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hcdn/chunking.hpp"
#include "hcdn/engine.hpp"

namespace hcdn {

/// One payload segment of a flow. `source` points at the sender's bytes so
/// receivers copy exactly what the sender held.
struct PayloadDescriptor {
    std::uint32_t length = 0;
    std::uint64_t fingerprint = 0;
    std::shared_ptr<const Bytes> source;
    std::size_t offset = 0;
};

/// Content token for synthetic payloads: identical (file, piece, offset,
/// length) always yields the same fingerprint.
std::uint64_t payload_fingerprint(std::uint64_t file_id, std::int64_t piece, std::size_t offset, std::size_t length);

/// Cuts `length` bytes of `source` starting at `offset` into segments of at
/// most `segment_bytes`, fingerprinted relative to `piece`.
std::vector<PayloadDescriptor> segment_payload(std::shared_ptr<const Bytes> source, std::size_t offset, std::size_t length,
                                               std::uint64_t file_id, std::int64_t piece,
                                               std::uint32_t segment_bytes = kPayloadBytes);

struct FlowOptions {
    int window = 8;
    int max_retries = 16;
    bool handshake = true;  // one control round trip before data
    std::uint32_t header_bytes = kHeaderBytes;
    int max_backoff_exponent = 5;
    SimTime rto_override = 0;
};

struct FlowResult {
    bool ok = false;
    SimTime start = 0;
    SimTime finish = 0;
    std::uint64_t retransmissions = 0;
    std::uint64_t payload_bytes = 0;
};

struct FlowCallbacks {
    std::function<void(const PayloadDescriptor&)> on_deliver;        // receiver, in order
    std::function<void(const FlowResult&)> on_receiver_complete;     // all data in, or failure
    std::function<void(const FlowResult&)> on_sender_complete;       // all data acked, or failure
};

/// Retransmission timeout for a route: four base round trips plus the time to
/// drain every queue on the forward and reverse path. A packet that is not
/// lost is therefore always acked before its timer fires.
SimTime flow_rto(const Topology& t, const std::vector<Hop>& forward, const FlowOptions& opts);

/// Fixed-window selective-repeat ARQ with cumulative acks, per-packet
/// timers, and exponential timer backoff. Stands in for TCP.
class ReliableFlow : public std::enable_shared_from_this<ReliableFlow> {
public:
    ReliableFlow(Network& net, NodeId src, NodeId dst, std::vector<PayloadDescriptor> payload, FlowOptions opts,
                 FlowCallbacks callbacks);

    void start();
    void abort();

    NodeId src() const { return src_; }
    NodeId dst() const { return dst_; }
    SimTime rto() const { return rto_; }
    int in_flight() const { return in_flight_; }
    int max_in_flight() const { return max_in_flight_; }
    std::uint64_t retransmissions() const { return retransmissions_; }
    bool sender_done() const { return sender_done_; }
    bool receiver_done() const { return receiver_done_; }

private:
    enum class SegState : std::uint8_t { Unsent, InFlight, Acked };

    struct DataBody {
        std::weak_ptr<ReliableFlow> flow;
        std::uint32_t seq;
    };
    struct AckBody {
        std::weak_ptr<ReliableFlow> flow;
        std::uint32_t cumulative;
        std::uint32_t seq;
    };
    struct SynBody {
        std::weak_ptr<ReliableFlow> flow;
        bool reply;
    };

    void send_syn();
    void on_syn_timeout(int attempt);
    void on_syn(bool reply);
    void fill_window();
    void transmit_segment(std::uint32_t seq);
    void on_timeout(std::uint32_t seq, int attempt);
    void on_data(std::uint32_t seq);
    void on_ack(std::uint32_t cumulative, std::uint32_t seq);
    void mark_acked(std::uint32_t seq);
    void fail();
    FlowResult result(bool ok) const;

    Network& net_;
    NodeId src_;
    NodeId dst_;
    std::vector<PayloadDescriptor> payload_;
    FlowOptions opts_;
    FlowCallbacks cb_;
    SimTime rto_ = 0;
    SimTime started_ = 0;

    // sender
    bool established_ = false;
    int syn_attempts_ = 0;
    EventId syn_timer_ = 0;
    std::vector<SegState> state_;
    std::vector<int> attempts_;
    std::vector<EventId> timers_;
    std::uint32_t next_unsent_ = 0;
    std::uint32_t acked_ = 0;
    std::uint32_t ack_floor_ = 0;
    int in_flight_ = 0;
    int max_in_flight_ = 0;
    std::uint64_t retransmissions_ = 0;
    bool sender_done_ = false;

    // receiver
    bool receiver_open_ = false;
    std::vector<bool> received_;
    std::uint32_t next_expected_ = 0;
    std::uint64_t delivered_bytes_ = 0;
    bool receiver_done_ = false;
};

std::shared_ptr<ReliableFlow> flow_send(Network& net, NodeId src, NodeId dst, std::vector<PayloadDescriptor> payload,
                                        FlowOptions opts, FlowCallbacks callbacks);

/// Constant-bit-rate cross traffic between two hosts.
class CbrSource : public std::enable_shared_from_this<CbrSource> {
public:
    CbrSource(Network& net, NodeId src, NodeId dst, SimTime interval, std::uint32_t packet_size);
    void start(SimTime first_at);
    void stop() { running_ = false; }
    SimTime interval() const { return interval_; }
    std::uint64_t packets_sent() const { return sent_; }

private:
    void emit();

    Network& net_;
    NodeId src_;
    NodeId dst_;
    SimTime interval_;
    std::uint32_t packet_size_;
    std::uint64_t flow_tag_;
    std::uint64_t sent_ = 0;
    bool running_ = false;
};

/// Offered load is `rate_fraction` of the narrowest link on the src->dst
/// route. Returns nullptr (no traffic) when rate_fraction is 0. The first
/// packet is jittered uniformly within one interval.
std::shared_ptr<CbrSource> start_cbr(Network& net, NodeId src, NodeId dst, double rate_fraction,
                                     std::uint32_t packet_size, RandomEngine& jitter);

}  // namespace hcdn
