#pragma once

#include <any>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hcdn/rng.hpp"
#include "hcdn/topology.hpp"
#include "hcdn/types.hpp"

namespace hcdn {

// ---------------------------------------------------------------------------
// Event scheduling

using EventId = std::uint64_t;

class Simulator {
public:
    SimTime now() const { return now_; }

    /// Fires `action` at `at`; simultaneous events fire in scheduling order.
    EventId schedule(SimTime at, std::function<void()> action);
    EventId schedule_in(SimTime delay, std::function<void()> action) { return schedule(now_ + delay, std::move(action)); }
    void cancel(EventId id);

    bool step();
    void run();
    /// Runs every event with time <= `until`, then parks the clock at `until`.
    void run_until(SimTime until);

    bool idle() const { return queue_.size() == cancelled_.size(); }
    std::uint64_t events_fired() const { return fired_; }

    /// Order-sensitive hash over every fired event and every value mixed in
    /// by components; equal hashes mean equal traces.
    std::uint64_t trace_hash() const { return trace_; }
    void mix_trace(std::uint64_t v) { trace_ = hash_combine(trace_, v); }

private:
    struct Entry {
        SimTime time;
        EventId ordinal;
        mutable std::function<void()> action;
        bool operator>(const Entry& o) const { return time != o.time ? time > o.time : ordinal > o.ordinal; }
    };

    SimTime now_ = 0;
    EventId next_ordinal_ = 0;
    std::uint64_t fired_ = 0;
    std::uint64_t trace_ = 0x5eed;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue_;
    std::unordered_set<EventId> cancelled_;
};

// ---------------------------------------------------------------------------
// Packets

enum class PacketKind : std::uint8_t { Data, Ack, Control, MulticastData, Cbr };

std::string_view to_string(PacketKind k);

inline constexpr std::uint32_t kHeaderBytes = 50;
inline constexpr std::uint32_t kPayloadBytes = 1250;
inline constexpr std::uint32_t kControlBytes = 64;

using GroupId = int;

struct Packet {
    std::uint64_t id = 0;  // assigned by Network on send
    PacketKind kind = PacketKind::Control;
    std::uint32_t header_bytes = kHeaderBytes;
    std::uint32_t payload_bytes = 0;
    std::optional<std::uint64_t> fingerprint;  // present iff payload_bytes > 0
    NodeId src = -1;
    NodeId dst = -1;      // unicast destination
    GroupId group = -1;   // multicast group
    int ttl = 0;          // multicast only
    std::any body;        // protocol data carried end to end

    std::uint32_t size() const { return header_bytes + payload_bytes; }
    bool carries_content() const {
        return payload_bytes > 0 && (kind == PacketKind::Data || kind == PacketKind::MulticastData);
    }
};

/// Builds a header-only (or fixed-size) control packet.
Packet control_packet(PacketKind kind, std::uint32_t size, std::any body = {});

// ---------------------------------------------------------------------------
// Network

enum class DropCause : std::uint8_t { QueueFull, InducedLoss };

struct ChannelStats {
    std::uint64_t packets_in = 0;  // admission attempts, drops included
    std::uint64_t bytes_in = 0;
    std::uint64_t delivered = 0;   // reached the far end of the link
    std::uint64_t queue_drops = 0;
    std::uint64_t loss_drops = 0;
    std::uint64_t queued = 0;      // currently waiting or serializing
};

class Network;

/// Observes every admission attempt and drop; the metrics ledger hooks in here.
class LinkObserver {
public:
    virtual ~LinkObserver() = default;
    virtual void on_admit(const Network& net, LinkId link, Direction dir, const Packet& p) = 0;
    virtual void on_drop(const Network& net, LinkId link, Direction dir, const Packet& p, DropCause cause) = 0;
};

/// Serialization delay of `bytes` on a link of `bps`, rounded up to the ns.
constexpr SimTime serialization_delay(std::uint64_t bytes, std::int64_t bps) {
    const auto bits = static_cast<__int128>(bytes) * 8 * kNanosPerSecond;
    return static_cast<SimTime>((bits + bps - 1) / bps);
}

class Network {
public:
    using Handler = std::function<void(const Packet&)>;
    using GroupHandler = std::function<void(NodeId receiver, const Packet&)>;

    Network(Simulator& sim, const Topology& topology, const RoutingTable& routes, const RunRandom& random);
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    Simulator& sim() { return sim_; }
    const Topology& topology() const { return topo_; }
    const RoutingTable& routes() const { return routes_; }
    const RunRandom& random() const { return random_; }
    SimTime now() const { return sim_.now(); }

    void add_observer(LinkObserver* obs) { observers_.push_back(obs); }

    /// Routes `p` from p.src to p.dst along the static route; `on_arrival`
    /// runs when it reaches p.dst. Same-node sends deliver immediately.
    void send(Packet p, Handler on_arrival);

    /// Offers `p` to one direction of one link: drop-tail admission, FIFO
    /// serialization, then induced loss, then propagation. `on_far_end` runs
    /// at the receiving node.
    void transmit(Packet p, LinkId link, Direction dir, Handler on_far_end);

    void subscribe(GroupId group, NodeId host);
    void set_group_handler(GroupId group, GroupHandler handler);
    /// Fans `p` out over the reverse-path tree of `origin`, limited by `ttl`.
    void send_multicast(NodeId origin, GroupId group, Packet p, int ttl);

    /// Bernoulli loss applied to every packet that finishes serializing on
    /// this link direction.
    void set_loss(LinkId link, Direction dir, double rate);
    double loss(LinkId link, Direction dir) const { return channel(link, dir).loss_rate; }

    const ChannelStats& stats(LinkId link, Direction dir) const { return channel(link, dir).stats; }
    std::uint64_t packets_sent() const { return next_packet_id_; }

private:
    struct Transit {
        Packet packet;
        Handler on_far_end;
    };

    struct Channel {
        std::deque<Transit> queue;
        bool busy = false;
        double loss_rate = 0.0;
        std::optional<RandomEngine> loss_rng;
        ChannelStats stats;
    };

    struct Tree {
        std::vector<std::vector<Hop>> children;  // per node, outgoing branches
    };

    Channel& channel(LinkId link, Direction dir) { return channels_[static_cast<std::size_t>(link) * 2 + index_of(dir)]; }
    const Channel& channel(LinkId link, Direction dir) const {
        return channels_[static_cast<std::size_t>(link) * 2 + index_of(dir)];
    }

    void start_service(LinkId link, Direction dir);
    void finish_service(LinkId link, Direction dir);
    void forward_unicast(Packet p, std::shared_ptr<const Handler> handler, const std::vector<Hop>* route, std::size_t hop);
    void forward_multicast(NodeId at, NodeId origin, Packet p, const Tree& tree);
    const Tree& tree_for(GroupId group, NodeId origin);

    Simulator& sim_;
    const Topology& topo_;
    const RoutingTable& routes_;
    RunRandom random_;
    std::vector<Channel> channels_;
    std::vector<LinkObserver*> observers_;
    std::uint64_t next_packet_id_ = 0;

    std::map<GroupId, std::vector<bool>> members_;
    std::map<GroupId, GroupHandler> group_handlers_;
    std::map<std::pair<GroupId, NodeId>, Tree> trees_;
};

}  // namespace hcdn
