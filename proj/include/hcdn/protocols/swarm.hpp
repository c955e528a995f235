#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hcdn/chunking.hpp"
#include "hcdn/engine.hpp"
#include "hcdn/flow.hpp"
#include "hcdn/metrics.hpp"
#include "hcdn/protocols/availability.hpp"
#include "hcdn/protocols/handshake.hpp"

namespace hcdn {

/// The shared file: digests for verification and the seeder's piece bytes.
struct SharedFile {
    std::uint64_t id = 0;
    FileSpec spec;
    std::shared_ptr<const Bytes> content;
    std::vector<std::shared_ptr<const Bytes>> pieces;

    static SharedFile make(Bytes content, std::size_t piece_size, std::uint64_t id = 1, std::string name = "file");
};

struct SwarmParams {
    int port_pool_capacity = 4;
    int upload_slots = 4;  // reciprocation: unchoked peers
    SimTime rechoke_interval = from_seconds(10);
    SimTime handshake_timeout = from_seconds(2);
    SimTime retry_backoff = from_seconds(5);
    int global_attempt_limit = 32;
    int batch_size = 4;
    std::size_t peer_list_size = 20;
    std::uint32_t control_bytes = kControlBytes;
    std::uint32_t have_bytes = kControlBytes;
    FlowOptions flow{.window = 8, .max_retries = 16, .handshake = false};

    // hybrid
    int multicast_ttl = 3;
    SimTime suppression_holdoff = from_millis(500);  // upper bound of the uniform hold-off
    double multicast_rate_fraction = 0.5;            // of the origin's spoke bandwidth
    SimTime claim_timeout = from_seconds(20);
    SimTime multicast_quiet = from_millis(500);
};

enum class SwarmMode : std::uint8_t { P2P, Hybrid };

struct TransferSession {
    enum class State : std::uint8_t { Handshaking, Transferring, Done, Failed };

    PeerId uploader = -1;
    PeerId downloader = -1;
    std::size_t chunk = 0;
    int upload_slot = -1;
    int download_slot = -1;
    std::uint64_t session = 0;
    State state = State::Handshaking;
    // handshake chain as observed by the uploader
    bool saw_type1 = false;
    bool sent_type2 = false;
    bool saw_type4 = false;
};

/// Counters exposed for property tests.
struct SwarmStats {
    std::uint64_t type1_received = 0;
    std::uint64_t responses_sent = 0;
    std::uint64_t reservations = 0;
    std::uint64_t reservations_released = 0;
    std::uint64_t multicasts_started = 0;
    std::uint64_t multicasts_suppressed = 0;
    std::uint64_t pieces_via_multicast = 0;
    std::uint64_t pieces_via_unicast = 0;
    std::uint64_t claim_conflicts = 0;
    std::uint64_t digest_failures = 0;
};

/// Swarm of peers driven by per-peer heads. In automatic mode each peer
/// contacts the tracker when it starts, connects to its peer list, and keeps
/// batch_size chunk requests outstanding until complete. In manual mode
/// nothing happens unless scripted through request_chunk.
class Swarm {
public:
    struct PeerSpec {
        NodeId node = -1;
        bool seeder = false;
        std::optional<SimTime> start;  // automatic mode: when the head starts
    };

    Swarm(Network& net, const SharedFile& file, std::vector<PeerSpec> peers, SwarmParams params, SwarmMode mode,
          bool automatic = true);
    ~Swarm();
    Swarm(const Swarm&) = delete;
    Swarm& operator=(const Swarm&) = delete;

    /// Registers seeders with the tracker and schedules peer starts.
    void launch();

    /// Runs until every non-seeder peer completed or failed, or `limit`.
    void run(SimTime limit);

    // manual mode
    void give_piece(PeerId peer, std::size_t chunk);
    /// Scripted table entry; unlike announcements it need not be true.
    void learn(PeerId peer, std::size_t chunk, PeerId holder);
    /// Starts the requester FSM for `chunk` with candidates from the
    /// peer's availability table, in table order.
    void request_chunk(PeerId peer, std::size_t chunk);

    std::size_t peer_count() const { return peers_.size(); }
    NodeId node_of(PeerId p) const;
    std::optional<PeerId> peer_at(NodeId node) const;
    bool is_seeder(PeerId p) const;
    const PieceMap& have(PeerId p) const;
    const AvailabilityTable& table(PeerId p) const;
    const PortPool& upload_pool(PeerId p) const;
    bool failed(PeerId p) const;
    int max_concurrent_requests(PeerId p) const;

    /// Assembled bytes of a peer's file; throws ChunkError if incomplete.
    Bytes assembled(PeerId p) const;

    std::vector<DownloadRecord> records() const;
    const std::vector<HandshakeTraceEntry>& trace() const { return trace_; }
    const std::vector<TransferSession>& sessions() const { return sessions_; }
    const SwarmStats& stats() const { return stats_; }
    bool all_done() const;

    /// Every (peer, piece) entry in every availability table refers to a
    /// piece that peer holds.
    bool tables_truthful() const;

    /// One-line summary of a peer's head state, for diagnostics.
    std::string describe(PeerId p) const;

    /// Observer hook for tests: fires whenever a peer verifies a piece.
    std::function<void(PeerId, std::size_t, bool via_multicast)> on_piece;

private:
    struct Message;
    struct McData;
    struct Request;
    struct Reservation;
    struct Partial;
    struct Peer;

    Peer& peer(PeerId p) { return *peers_.at(static_cast<std::size_t>(p)); }
    const Peer& peer(PeerId p) const { return *peers_.at(static_cast<std::size_t>(p)); }

    void start_peer(PeerId p);
    void send_message(PeerId from, PeerId to, std::shared_ptr<Message> m, std::uint32_t size);
    void deliver(const Message& m);
    void send_handshake(const HandshakeMessage& hs, PeerId from, PeerId to);
    void trace_event(HandshakeTraceEntry::Event ev, PeerId from, PeerId to, std::size_t chunk);

    // tracker and connections
    void on_tracker_request(PeerId from);
    void on_tracker_reply(PeerId p, const std::vector<PeerId>& list);
    void request_peers(PeerId p);
    void connect(PeerId p, PeerId q, int attempt = 0);
    void schedule_refresh(PeerId p);
    void on_connect(PeerId p, PeerId from, const std::vector<bool>& bits, bool reply);
    void on_have(PeerId p, PeerId from, std::size_t chunk);

    // head
    void pump(PeerId p);
    bool eligible(PeerId p, std::size_t chunk, SimTime& wake) const;
    std::vector<PeerId> candidates(PeerId p, std::size_t chunk);
    void initiate(PeerId p, std::size_t chunk, std::vector<PeerId> cands);
    void try_candidate(PeerId p, std::size_t chunk);
    void advance(PeerId p, std::size_t chunk);
    void defer(PeerId p, std::size_t chunk);
    void on_request_timeout(PeerId p, std::size_t chunk, std::uint64_t session);
    void on_data_timeout(PeerId p, std::size_t chunk, std::uint64_t session);
    void on_reply(PeerId p, const HandshakeMessage& hs);
    void on_download_done(PeerId p, std::size_t chunk, std::uint64_t session, PeerId from, const FlowResult& r,
                          std::shared_ptr<Bytes> buffer);
    void fail_peer(PeerId p);
    void schedule_wake(PeerId p, SimTime at);

    // responder
    void on_type1(PeerId p, const HandshakeMessage& hs);
    void on_type4(PeerId p, const HandshakeMessage& hs);
    void on_reservation_expired(PeerId p, std::uint64_t session);
    bool admit(PeerId p, PeerId requester);
    void rechoke(PeerId p);

    // pieces
    void accept_piece(PeerId p, std::size_t chunk, std::shared_ptr<const Bytes> bytes, std::optional<PeerId> source,
                      bool via_multicast);

    // hybrid
    bool same_island(PeerId a, PeerId b) const;
    void multicast_control(PeerId p, bool island_have, std::size_t chunk);
    void maybe_multicast(PeerId p, std::size_t chunk, SimTime verified_at);
    void on_group_packet(NodeId receiver, const Packet& pkt);
    void on_claim(PeerId p, PeerId from, std::size_t chunk);
    void on_island_have(PeerId p, PeerId from, std::size_t chunk);

    static constexpr int kConnectAttempts = 8;

    Network& net_;
    const SharedFile& file_;
    SwarmParams params_;
    SwarmMode mode_;
    bool automatic_;
    std::vector<std::unique_ptr<Peer>> peers_;
    std::map<NodeId, PeerId> by_node_;
    PeerId tracker_peer_ = -1;
    Tracker tracker_;
    RandomEngine tracker_rng_;
    std::uint64_t next_session_ = 0;
    std::vector<HandshakeTraceEntry> trace_;
    std::vector<TransferSession> sessions_;
    std::map<std::uint64_t, std::size_t> session_index_;
    std::map<std::uint64_t, std::shared_ptr<ReliableFlow>> flows_;
    SwarmStats stats_;
    bool stopped_ = false;
};

}  // namespace hcdn
