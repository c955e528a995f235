#include "hcdn/protocols/swarm.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hcdn {

SharedFile SharedFile::make(Bytes content, std::size_t piece_size, std::uint64_t id, std::string name) {
    SharedFile f;
    f.id = id;
    auto [spec, pieces] = make_pieces(content, piece_size, std::move(name));
    f.spec = std::move(spec);
    for (auto& p : pieces) f.pieces.push_back(p.bytes);
    f.content = std::make_shared<const Bytes>(std::move(content));
    return f;
}

struct Swarm::Message {
    enum class Type : std::uint8_t { Handshake, Have, Connect, ConnectReply, TrackerRequest, TrackerReply };
    Type type = Type::Handshake;
    PeerId from = -1;
    PeerId to = -1;
    HandshakeMessage hs;
    std::size_t chunk = 0;
    std::vector<bool> bits;
    std::vector<PeerId> peers;
};

struct Swarm::McData {
    PeerId from;
    std::size_t chunk;
    std::uint32_t index;
    std::uint32_t count;
    PayloadDescriptor desc;
};

namespace {
struct McControl {
    bool island_have;
    PeerId from;
    std::size_t chunk;
};
}  // namespace

struct Swarm::Request {
    enum class Stage : std::uint8_t { Asking, AwaitingData, Transferring };

    std::size_t chunk = 0;
    std::vector<PeerId> cands;
    std::size_t next = 0;
    std::uint64_t session = 0;
    PeerId current = -1;
    EventId timer = 0;
    Stage stage = Stage::Asking;
    int listen_slot = -1;
    bool outside = false;
};

struct Swarm::Reservation {
    PeerId requester;
    std::size_t chunk;
    int slot;
    EventId timer;
};

struct Swarm::Partial {
    Bytes buf;
    std::vector<bool> got;
    std::size_t n_got = 0;
    SimTime last = 0;
};

struct Swarm::Peer {
    PeerId id = -1;
    NodeId node = -1;
    bool seeder = false;
    std::optional<SimTime> start;
    std::optional<int> island;

    PieceMap have;
    std::vector<std::shared_ptr<const Bytes>> pieces;
    AvailabilityTable table;
    std::set<PeerId> neighbors;
    std::set<PeerId> connected;  // bitfield exchange confirmed
    bool tracker_ok = false;
    bool refresh_pending = false;
    std::map<PeerId, std::size_t> neighbor_count;
    PortPool uploads;
    PortPool downloads;

    // reciprocation
    std::set<PeerId> unchoked;
    std::map<PeerId, SimTime> last_type1;
    std::map<PeerId, std::uint64_t> received_from;
    std::map<PeerId, int> serving;

    // head
    std::map<std::size_t, Request> active;
    std::map<std::size_t, SimTime> deferred;
    std::map<std::size_t, std::set<PeerId>> deferred_tried;
    std::vector<int> attempts;
    std::map<std::uint64_t, Reservation> reservations;
    int max_active = 0;
    EventId wake = 0;
    SimTime wake_at = -1;

    bool started = false;
    bool failed = false;
    SimTime started_at = 0;
    std::optional<SimTime> finish;
    std::uint64_t bytes_received = 0;
    std::uint64_t retransmissions = 0;
    RandomEngine rng;

    // island
    std::map<std::size_t, std::pair<PeerId, SimTime>> claims;
    std::map<std::size_t, Partial> partial;
    std::set<std::size_t> island_seen;
    SimTime mc_free_at = 0;  // one outgoing multicast at a time

    Peer(int pool, int batch) : uploads(pool), downloads(batch) {}
};

Swarm::~Swarm() = default;

Swarm::Swarm(Network& net, const SharedFile& file, std::vector<PeerSpec> specs, SwarmParams params, SwarmMode mode,
             bool automatic)
    : net_(net),
      file_(file),
      params_(params),
      mode_(mode),
      automatic_(automatic),
      tracker_rng_(net.random().substream("tracker")) {
    if (params_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (params_.upload_slots < 1) throw ConfigError("upload_slots must be >= 1");
    if (params_.global_attempt_limit < 1) throw ConfigError("global_attempt_limit must be >= 1");
    const std::size_t n = file_.spec.piece_count();
    const Topology& topo = net_.topology();
    std::set<int> groups;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        if (by_node_.count(s.node)) throw ConfigError("two peers on node " + topo.node(s.node).id);
        auto p = std::make_unique<Peer>(params_.port_pool_capacity, params_.batch_size);
        p->id = static_cast<PeerId>(i);
        p->node = s.node;
        p->seeder = s.seeder;
        p->start = s.start;
        p->have = PieceMap(n);
        p->pieces.resize(n);
        p->table = AvailabilityTable(n);
        p->attempts.assign(n, 0);
        p->rng = net_.random().substream("peer/" + std::to_string(i));
        if (s.seeder)
            for (std::size_t c = 0; c < n; ++c) {
                p->have.mark_verified(file_.spec, c, *file_.pieces[c]);
                p->pieces[c] = file_.pieces[c];
            }
        if (mode_ == SwarmMode::Hybrid && !s.seeder) {
            p->island = topo.island_of(s.node);
            if (p->island) {
                net_.subscribe(*p->island, s.node);
                groups.insert(*p->island);
            }
        }
        by_node_[s.node] = p->id;
        peers_.push_back(std::move(p));
    }
    for (int g : groups)
        net_.set_group_handler(g, [this](NodeId receiver, const Packet& pkt) { on_group_packet(receiver, pkt); });
}

NodeId Swarm::node_of(PeerId p) const { return peer(p).node; }
bool Swarm::is_seeder(PeerId p) const { return peer(p).seeder; }
const PieceMap& Swarm::have(PeerId p) const { return peer(p).have; }
const AvailabilityTable& Swarm::table(PeerId p) const { return peer(p).table; }
const PortPool& Swarm::upload_pool(PeerId p) const { return peer(p).uploads; }
bool Swarm::failed(PeerId p) const { return peer(p).failed; }
int Swarm::max_concurrent_requests(PeerId p) const { return peer(p).max_active; }

std::optional<PeerId> Swarm::peer_at(NodeId node) const {
    auto it = by_node_.find(node);
    if (it == by_node_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// lifecycle

void Swarm::launch() {
    for (auto& p : peers_) {
        if (!p->seeder) continue;
        if (tracker_peer_ < 0) tracker_peer_ = p->id;
        tracker_.register_peer(p->id);
        p->started = true;
        p->started_at = net_.now();
        if (automatic_) {
            const PeerId id = p->id;
            net_.sim().schedule_in(params_.rechoke_interval, [this, id] { rechoke(id); });
        }
    }
    if (!automatic_) return;
    if (tracker_peer_ < 0) throw ConfigError("swarm has no seeder");
    for (auto& p : peers_) {
        if (p->seeder) continue;
        const PeerId id = p->id;
        net_.sim().schedule(std::max(net_.now(), p->start.value_or(net_.now())), [this, id] { start_peer(id); });
    }
}

void Swarm::start_peer(PeerId id) {
    Peer& me = peer(id);
    me.started = true;
    me.started_at = net_.now();
    request_peers(id);
    net_.sim().schedule_in(params_.rechoke_interval, [this, id] { rechoke(id); });
}

void Swarm::request_peers(PeerId id) {
    if (stopped_ || peer(id).have.complete()) return;
    auto m = std::make_shared<Message>();
    m->type = Message::Type::TrackerRequest;
    send_message(id, tracker_peer_, m, params_.control_bytes);
    net_.sim().schedule_in(params_.handshake_timeout, [this, id] {
        if (!peer(id).tracker_ok) request_peers(id);
    });
}

void Swarm::run(SimTime limit) {
    Simulator& sim = net_.sim();
    stopped_ = false;
    const EventId stop = sim.schedule(std::max(limit, sim.now()), [this] { stopped_ = true; });
    while (!stopped_ && !all_done() && sim.step()) {
    }
    sim.cancel(stop);
    stopped_ = true;
}

bool Swarm::all_done() const {
    for (const auto& p : peers_)
        if (!p->seeder && !p->failed && !p->have.complete()) return false;
    return true;
}

std::vector<DownloadRecord> Swarm::records() const {
    std::vector<DownloadRecord> out;
    for (const auto& p : peers_) {
        if (p->seeder) continue;
        DownloadRecord r;
        r.client = net_.topology().node(p->node).id;
        r.start = p->started ? p->started_at : p->start.value_or(0);
        r.finish = p->finish;
        r.bytes_received = p->bytes_received;
        r.retransmissions = p->retransmissions;
        out.push_back(std::move(r));
    }
    return out;
}

Bytes Swarm::assembled(PeerId id) const {
    const Peer& me = peer(id);
    std::vector<Piece> pieces;
    for (std::size_t c = 0; c < me.pieces.size(); ++c)
        if (me.have.has(c)) pieces.push_back(Piece{c, me.pieces[c], file_.spec.piece_digests[c]});
    return assemble(file_.spec, pieces);
}

bool Swarm::tables_truthful() const {
    for (const auto& p : peers_)
        for (std::size_t c = 0; c < p->table.piece_count(); ++c)
            for (PeerId h : p->table.holders(c))
                if (!peer(h).have.has(c)) return false;
    return true;
}

std::string Swarm::describe(PeerId id) const {
    const Peer& me = peer(id);
    std::string out = net_.topology().node(me.node).id + " have=" + std::to_string(me.have.count()) + "/" +
                      std::to_string(me.have.size());
    if (me.failed) out += " failed";
    for (const auto& [c, r] : me.active)
        out += " active(" + std::to_string(c) + " stage=" + std::to_string(static_cast<int>(r.stage)) +
               " cand=" + std::to_string(r.next) + "/" + std::to_string(r.cands.size()) + ")";
    for (const auto& [c, t] : me.deferred) out += " deferred(" + std::to_string(c) + "@" + format_fixed(to_seconds(t), 3) + ")";
    for (const auto& [c, cl] : me.claims)
        out += " claim(" + std::to_string(c) + " by " + std::to_string(cl.first) + "@" + format_fixed(to_seconds(cl.second), 3) + ")";
    for (const auto& [c, pa] : me.partial)
        out += " partial(" + std::to_string(c) + " " + std::to_string(pa.n_got) + "/" + std::to_string(pa.got.size()) + ")";
    for (std::size_t c = 0; c < me.table.piece_count(); ++c)
        out += " t" + std::to_string(c) + "=" + std::to_string(me.table.count(c));
    out += " attempts=";
    for (int a : me.attempts) out += std::to_string(a) + ",";
    return out;
}

// ---------------------------------------------------------------------------
// messaging

void Swarm::send_message(PeerId from, PeerId to, std::shared_ptr<Message> m, std::uint32_t size) {
    m->from = from;
    m->to = to;
    Packet pkt = control_packet(PacketKind::Control, size, std::shared_ptr<const Message>(std::move(m)));
    pkt.src = peer(from).node;
    pkt.dst = peer(to).node;
    net_.send(std::move(pkt), [this](const Packet& arrived) {
        deliver(*std::any_cast<const std::shared_ptr<const Message>&>(arrived.body));
    });
}

void Swarm::send_handshake(const HandshakeMessage& hs, PeerId from, PeerId to) {
    HandshakeTraceEntry e;
    e.time = net_.now();
    e.kind = hs.kind;
    e.from = from;
    e.to = to;
    e.chunk = hs.chunk;
    e.port = hs.port;
    trace_.push_back(e);
    auto m = std::make_shared<Message>();
    m->type = Message::Type::Handshake;
    m->hs = hs;
    send_message(from, to, std::move(m), params_.control_bytes);
}

void Swarm::trace_event(HandshakeTraceEntry::Event ev, PeerId from, PeerId to, std::size_t chunk) {
    HandshakeTraceEntry e;
    e.time = net_.now();
    e.event = ev;
    e.from = from;
    e.to = to;
    e.chunk = chunk;
    trace_.push_back(e);
}

void Swarm::deliver(const Message& m) {
    switch (m.type) {
        case Message::Type::Handshake:
            switch (m.hs.kind) {
                case HandshakeKind::Type1: on_type1(m.to, m.hs); break;
                case HandshakeKind::Type4: on_type4(m.to, m.hs); break;
                default: on_reply(m.to, m.hs); break;
            }
            break;
        case Message::Type::Have: on_have(m.to, m.from, m.chunk); break;
        case Message::Type::Connect: on_connect(m.to, m.from, m.bits, false); break;
        case Message::Type::ConnectReply: on_connect(m.to, m.from, m.bits, true); break;
        case Message::Type::TrackerRequest: on_tracker_request(m.from); break;
        case Message::Type::TrackerReply: on_tracker_reply(m.to, m.peers); break;
    }
}

// ---------------------------------------------------------------------------
// tracker and connections

void Swarm::on_tracker_request(PeerId from) {
    tracker_.register_peer(from);
    auto m = std::make_shared<Message>();
    m->type = Message::Type::TrackerReply;
    m->peers = tracker_.announce(from, tracker_rng_, params_.peer_list_size);
    send_message(tracker_peer_, from, std::move(m), params_.control_bytes);
}

void Swarm::on_tracker_reply(PeerId p, const std::vector<PeerId>& list) {
    peer(p).tracker_ok = true;
    for (PeerId q : list)
        if (q != p && !peer(p).neighbors.count(q)) connect(p, q);
}

void Swarm::connect(PeerId p, PeerId q, int attempt) {
    Peer& me = peer(p);
    me.neighbors.insert(q);
    me.connected.erase(q);
    auto m = std::make_shared<Message>();
    m->type = Message::Type::Connect;
    m->bits = me.have.bits();
    send_message(p, q, std::move(m), params_.control_bytes);
    if (attempt + 1 >= kConnectAttempts) return;
    net_.sim().schedule_in(params_.handshake_timeout, [this, p, q, attempt] {
        if (!stopped_ && !peer(p).connected.count(q)) connect(p, q, attempt + 1);
    });
}

void Swarm::on_connect(PeerId p, PeerId from, const std::vector<bool>& bits, bool reply) {
    Peer& me = peer(p);
    me.neighbors.insert(from);
    me.connected.insert(from);
    for (std::size_t c = 0; c < bits.size(); ++c)
        if (bits[c] && !me.table.holds(c, from)) {
            me.table.add(c, from);
            ++me.neighbor_count[from];
        }
    if (me.neighbor_count[from] == file_.spec.piece_count()) me.unchoked.erase(from);
    if (!reply) {
        auto m = std::make_shared<Message>();
        m->type = Message::Type::ConnectReply;
        m->bits = me.have.bits();
        send_message(p, from, std::move(m), params_.control_bytes);
    }
    pump(p);
}

void Swarm::on_have(PeerId p, PeerId from, std::size_t chunk) {
    Peer& me = peer(p);
    me.neighbors.insert(from);
    if (!me.table.holds(chunk, from)) {
        me.table.add(chunk, from);
        if (++me.neighbor_count[from] == file_.spec.piece_count()) me.unchoked.erase(from);
    }
    if (auto it = me.deferred_tried.find(chunk); it != me.deferred_tried.end() && !it->second.count(from)) {
        me.deferred.erase(chunk);
        me.deferred_tried.erase(it);
    }
    pump(p);
}

// ---------------------------------------------------------------------------
// head

void Swarm::schedule_wake(PeerId p, SimTime at) {
    Peer& me = peer(p);
    if (me.wake_at >= net_.now() && me.wake_at <= at) return;
    if (me.wake_at >= net_.now()) net_.sim().cancel(me.wake);
    me.wake_at = at;
    me.wake = net_.sim().schedule(at, [this, p] {
        peer(p).wake_at = -1;
        pump(p);
    });
}

bool Swarm::eligible(PeerId p, std::size_t chunk, SimTime& wake) const {
    const Peer& me = peer(p);
    const SimTime now = net_.now();
    if (me.active.count(chunk)) return false;
    if (auto it = me.deferred.find(chunk); it != me.deferred.end() && it->second > now) {
        wake = std::min(wake, it->second);
        return false;
    }
    if (mode_ == SwarmMode::Hybrid && me.island) {
        if (auto it = me.partial.find(chunk); it != me.partial.end() && it->second.last + params_.multicast_quiet > now) {
            wake = std::min(wake, it->second.last + params_.multicast_quiet);
            return false;
        }
        if (auto it = me.claims.find(chunk); it != me.claims.end() && it->second.first != p &&
                                             it->second.second + params_.claim_timeout > now) {
            wake = std::min(wake, it->second.second + params_.claim_timeout);
            return false;
        }
    }
    return true;
}

std::vector<PeerId> Swarm::candidates(PeerId p, std::size_t chunk) {
    Peer& me = peer(p);
    std::vector<PeerId> out;
    for (PeerId h : me.table.holders(chunk))
        if (h != p) out.push_back(h);
    std::shuffle(out.begin(), out.end(), me.rng);
    if (mode_ == SwarmMode::Hybrid && me.island) {
        std::vector<PeerId> local;
        for (PeerId h : out)
            if (same_island(p, h)) local.push_back(h);
        if (!local.empty()) return local;
    }
    return out;
}

void Swarm::pump(PeerId p) {
    Peer& me = peer(p);
    if (!automatic_ || !me.started || me.failed || me.seeder || me.have.complete()) return;
    SimTime wake = std::numeric_limits<SimTime>::max();
    while (static_cast<int>(me.active.size()) < params_.batch_size) {
        auto c = select_piece(me.table, me.have, selection_phase(me.have), me.rng,
                              [&](std::size_t i) { return eligible(p, i, wake); });
        if (!c) break;
        initiate(p, *c, candidates(p, *c));
        if (me.failed) return;
    }
    if (wake != std::numeric_limits<SimTime>::max())
        schedule_wake(p, wake);
    else if (me.active.empty() && !me.refresh_pending)
        schedule_refresh(p);
}

void Swarm::schedule_refresh(PeerId p) {
    peer(p).refresh_pending = true;
    net_.sim().schedule_in(params_.retry_backoff, [this, p] {
        Peer& me = peer(p);
        me.refresh_pending = false;
        if (stopped_ || me.failed || me.have.complete() || !me.active.empty()) return;
        if (!me.tracker_ok || me.neighbors.empty()) {
            me.tracker_ok = false;
            request_peers(p);
        } else {
            for (PeerId q : std::vector<PeerId>(me.neighbors.begin(), me.neighbors.end())) connect(p, q, kConnectAttempts - 1);
        }
        pump(p);
    });
}

void Swarm::request_chunk(PeerId p, std::size_t chunk) {
    Peer& me = peer(p);
    if (me.have.has(chunk) || me.active.count(chunk)) return;
    std::vector<PeerId> cands;
    for (PeerId h : me.table.holders(chunk))
        if (h != p) cands.push_back(h);
    initiate(p, chunk, std::move(cands));
}

void Swarm::initiate(PeerId p, std::size_t chunk, std::vector<PeerId> cands) {
    Peer& me = peer(p);
    me.deferred.erase(chunk);
    me.deferred_tried.erase(chunk);
    if (++me.attempts[chunk] > params_.global_attempt_limit) {
        fail_peer(p);
        return;
    }
    Request r;
    r.chunk = chunk;
    r.cands = std::move(cands);
    if (mode_ == SwarmMode::Hybrid && me.island) {
        r.outside = std::none_of(r.cands.begin(), r.cands.end(), [&](PeerId h) { return same_island(p, h); });
        if (r.outside && !r.cands.empty()) {
            me.claims[chunk] = {p, net_.now()};
            multicast_control(p, false, chunk);
        }
    }
    me.active[chunk] = std::move(r);
    me.max_active = std::max(me.max_active, static_cast<int>(me.active.size()));
    try_candidate(p, chunk);
}

void Swarm::try_candidate(PeerId p, std::size_t chunk) {
    Peer& me = peer(p);
    Request& r = me.active.at(chunk);
    if (r.next >= r.cands.size()) {
        defer(p, chunk);
        return;
    }
    r.session = ++next_session_;
    r.current = r.cands[r.next];
    r.stage = Request::Stage::Asking;
    HandshakeMessage hs;
    hs.kind = HandshakeKind::Type1;
    hs.chunk = chunk;
    hs.requester = p;
    hs.responder = r.current;
    hs.session = r.session;
    const std::uint64_t session = r.session;
    r.timer = net_.sim().schedule_in(params_.handshake_timeout,
                                     [this, p, chunk, session] { on_request_timeout(p, chunk, session); });
    send_handshake(hs, p, hs.responder);
}

void Swarm::advance(PeerId p, std::size_t chunk) {
    ++peer(p).active.at(chunk).next;
    try_candidate(p, chunk);
}

void Swarm::defer(PeerId p, std::size_t chunk) {
    Peer& me = peer(p);
    auto it = me.active.find(chunk);
    std::set<PeerId> tried(it->second.cands.begin(), it->second.cands.end());
    me.active.erase(it);
    const SimTime at = net_.now() + params_.retry_backoff;
    me.deferred[chunk] = at;
    me.deferred_tried[chunk] = std::move(tried);
    if (automatic_) {
        schedule_wake(p, at);
        pump(p);
    } else {
        net_.sim().schedule(at, [this, p, chunk] {
            Peer& m = peer(p);
            if (m.failed || m.have.has(chunk) || m.active.count(chunk) || !m.deferred.count(chunk)) return;
            request_chunk(p, chunk);
        });
    }
}

void Swarm::on_request_timeout(PeerId p, std::size_t chunk, std::uint64_t session) {
    Peer& me = peer(p);
    auto it = me.active.find(chunk);
    if (it == me.active.end() || it->second.session != session || it->second.stage != Request::Stage::Asking) return;
    trace_event(HandshakeTraceEntry::Event::RequestTimeout, p, it->second.current, chunk);
    advance(p, chunk);
}

void Swarm::on_data_timeout(PeerId p, std::size_t chunk, std::uint64_t session) {
    Peer& me = peer(p);
    auto it = me.active.find(chunk);
    if (it == me.active.end() || it->second.session != session || it->second.stage != Request::Stage::AwaitingData)
        return;
    trace_event(HandshakeTraceEntry::Event::DataTimeout, p, it->second.current, chunk);
    me.downloads.release(it->second.listen_slot);
    it->second.listen_slot = -1;
    advance(p, chunk);
}

void Swarm::on_reply(PeerId p, const HandshakeMessage& hs) {
    Peer& me = peer(p);
    auto it = me.active.find(hs.chunk);
    if (it == me.active.end() || it->second.session != hs.session || it->second.stage != Request::Stage::Asking) return;
    Request& r = it->second;
    net_.sim().cancel(r.timer);
    switch (hs.kind) {
        case HandshakeKind::Type3a:
            me.table.remove(hs.chunk, hs.responder);
            if (me.neighbor_count[hs.responder] > 0) --me.neighbor_count[hs.responder];
            advance(p, hs.chunk);
            return;
        case HandshakeKind::Type3b:
            advance(p, hs.chunk);
            return;
        case HandshakeKind::Type2: {
            auto slot = me.downloads.reserve();
            if (!slot) {
                advance(p, hs.chunk);
                return;
            }
            r.listen_slot = *slot;
            r.stage = Request::Stage::AwaitingData;
            HandshakeMessage confirm = hs;
            confirm.kind = HandshakeKind::Type4;
            confirm.port = *slot;
            const std::size_t chunk = hs.chunk;
            const std::uint64_t session = hs.session;
            r.timer = net_.sim().schedule_in(params_.handshake_timeout,
                                             [this, p, chunk, session] { on_data_timeout(p, chunk, session); });
            send_handshake(confirm, p, hs.responder);
            return;
        }
        default: throw std::logic_error("unexpected handshake reply");
    }
}

void Swarm::on_download_done(PeerId p, std::size_t chunk, std::uint64_t session, PeerId from, const FlowResult& r,
                             std::shared_ptr<Bytes> buffer) {
    Peer& me = peer(p);
    me.retransmissions += r.retransmissions;
    auto it = me.active.find(chunk);
    const bool current = it != me.active.end() && it->second.session == session;
    if (current) {
        if (it->second.listen_slot >= 0) me.downloads.release(it->second.listen_slot);
        net_.sim().cancel(it->second.timer);
        me.active.erase(it);
    }
    if (r.ok) {
        me.received_from[from] += r.payload_bytes;
        accept_piece(p, chunk, std::move(buffer), from, false);
    } else if (current && !me.have.has(chunk)) {
        me.deferred[chunk] = net_.now() + params_.retry_backoff;
        me.deferred_tried[chunk] = {from};
        if (!automatic_) {
            net_.sim().schedule(me.deferred[chunk], [this, p, chunk] { request_chunk(p, chunk); });
            return;
        }
        schedule_wake(p, me.deferred[chunk]);
    }
    pump(p);
}

void Swarm::fail_peer(PeerId p) {
    Peer& me = peer(p);
    me.failed = true;
    for (auto& [c, r] : me.active) {
        net_.sim().cancel(r.timer);
        if (r.listen_slot >= 0) me.downloads.release(r.listen_slot);
    }
    me.active.clear();
}

// ---------------------------------------------------------------------------
// responder

bool Swarm::admit(PeerId p, PeerId requester) {
    Peer& me = peer(p);
    if (me.unchoked.count(requester)) return true;
    if (static_cast<int>(me.unchoked.size()) < params_.upload_slots) {
        me.unchoked.insert(requester);
        return true;
    }
    const SimTime idle_after = params_.retry_backoff + params_.handshake_timeout;
    for (PeerId u : me.unchoked) {
        if (me.serving[u] > 0) continue;
        auto lt = me.last_type1.find(u);
        if (lt != me.last_type1.end() && lt->second + idle_after > net_.now()) continue;
        me.unchoked.erase(u);
        me.unchoked.insert(requester);
        return true;
    }
    return false;
}

void Swarm::rechoke(PeerId p) {
    if (stopped_) return;
    Peer& me = peer(p);
    const SimTime now = net_.now();
    std::vector<PeerId> interested;
    for (auto [q, t] : me.last_type1)
        if (t + params_.rechoke_interval > now && me.neighbor_count[q] < file_.spec.piece_count())
            interested.push_back(q);
    std::shuffle(interested.begin(), interested.end(), me.rng);
    const std::size_t u = static_cast<std::size_t>(params_.upload_slots);
    std::set<PeerId> chosen;
    if (me.have.complete()) {
        for (std::size_t i = 0; i < interested.size() && i < u; ++i) chosen.insert(interested[i]);
    } else {
        std::stable_sort(interested.begin(), interested.end(),
                         [&](PeerId a, PeerId b) { return me.received_from[a] > me.received_from[b]; });
        std::size_t i = 0;
        for (; i < interested.size() && i + 1 < u; ++i) chosen.insert(interested[i]);
        if (i < interested.size()) chosen.insert(interested[i + uniform_index(me.rng, interested.size() - i)]);
    }
    me.unchoked = std::move(chosen);
    me.received_from.clear();
    if (!all_done()) net_.sim().schedule_in(params_.rechoke_interval, [this, p] { rechoke(p); });
}

void Swarm::on_type1(PeerId p, const HandshakeMessage& hs) {
    Peer& me = peer(p);
    ++stats_.type1_received;
    me.last_type1[hs.requester] = net_.now();
    const bool offer = hs.chunk < me.have.size() && me.have.has(hs.chunk) && !me.uploads.full();
    const bool admitted = offer ? admit(p, hs.requester) : true;
    HandshakeMessage reply = handshake_respond(me.have, me.uploads, admitted, hs);
    ++stats_.responses_sent;
    if (reply.kind == HandshakeKind::Type2) {
        ++stats_.reservations;
        ++me.serving[hs.requester];
        const std::uint64_t session = hs.session;
        const EventId timer =
            net_.sim().schedule_in(params_.handshake_timeout, [this, p, session] { on_reservation_expired(p, session); });
        me.reservations[session] = Reservation{hs.requester, hs.chunk, *reply.port, timer};
        TransferSession ts;
        ts.uploader = p;
        ts.downloader = hs.requester;
        ts.chunk = hs.chunk;
        ts.upload_slot = *reply.port;
        ts.session = session;
        ts.saw_type1 = true;
        ts.sent_type2 = true;
        session_index_[session] = sessions_.size();
        sessions_.push_back(ts);
    }
    send_handshake(reply, p, hs.requester);
}

void Swarm::on_reservation_expired(PeerId p, std::uint64_t session) {
    Peer& me = peer(p);
    auto it = me.reservations.find(session);
    if (it == me.reservations.end()) return;
    trace_event(HandshakeTraceEntry::Event::ReservationExpired, p, it->second.requester, it->second.chunk);
    me.uploads.release(it->second.slot);
    --me.serving[it->second.requester];
    ++stats_.reservations_released;
    sessions_[session_index_.at(session)].state = TransferSession::State::Failed;
    me.reservations.erase(it);
}

void Swarm::on_type4(PeerId p, const HandshakeMessage& hs) {
    Peer& me = peer(p);
    auto it = me.reservations.find(hs.session);
    if (it == me.reservations.end()) return;
    const Reservation res = it->second;
    net_.sim().cancel(res.timer);
    me.reservations.erase(it);
    TransferSession& ts = sessions_[session_index_.at(hs.session)];
    ts.saw_type4 = true;
    ts.download_slot = hs.port.value_or(-1);
    ts.state = TransferSession::State::Transferring;

    const PeerId req = res.requester;
    const std::size_t chunk = res.chunk;
    const std::uint64_t session = hs.session;
    auto source = me.pieces[chunk];
    auto buffer = std::make_shared<Bytes>(source->size());
    FlowCallbacks cb;
    cb.on_deliver = [this, req, chunk, session, buffer](const PayloadDescriptor& d) {
        std::copy_n(d.source->begin() + static_cast<std::ptrdiff_t>(d.offset), d.length,
                    buffer->begin() + static_cast<std::ptrdiff_t>(d.offset));
        Peer& dl = peer(req);
        dl.bytes_received += d.length;
        auto a = dl.active.find(chunk);
        if (a != dl.active.end() && a->second.session == session && a->second.stage == Request::Stage::AwaitingData) {
            net_.sim().cancel(a->second.timer);
            a->second.stage = Request::Stage::Transferring;
        }
    };
    cb.on_receiver_complete = [this, req, chunk, session, p, buffer](const FlowResult& r) {
        on_download_done(req, chunk, session, p, r, buffer);
    };
    cb.on_sender_complete = [this, p, req, session, slot = res.slot](const FlowResult& r) {
        Peer& up = peer(p);
        up.uploads.release(slot);
        --up.serving[req];
        ++stats_.reservations_released;
        sessions_[session_index_.at(session)].state =
            r.ok ? TransferSession::State::Done : TransferSession::State::Failed;
        net_.sim().schedule_in(0, [this, session] { flows_.erase(session); });
    };
    flows_[session] = flow_send(net_, me.node, peer(req).node,
                                segment_payload(source, 0, source->size(), file_.id, static_cast<std::int64_t>(chunk)),
                                params_.flow, std::move(cb));
}

// ---------------------------------------------------------------------------
// pieces

void Swarm::accept_piece(PeerId p, std::size_t chunk, std::shared_ptr<const Bytes> bytes, std::optional<PeerId> source,
                         bool via_multicast) {
    Peer& me = peer(p);
    if (me.have.has(chunk)) return;
    if (!me.have.mark_verified(file_.spec, chunk, *bytes)) {
        ++stats_.digest_failures;
        return;
    }
    me.pieces[chunk] = std::move(bytes);
    ++(via_multicast ? stats_.pieces_via_multicast : stats_.pieces_via_unicast);
    me.partial.erase(chunk);
    me.deferred.erase(chunk);
    me.deferred_tried.erase(chunk);
    if (auto it = me.active.find(chunk); it != me.active.end() && it->second.stage != Request::Stage::Transferring) {
        net_.sim().cancel(it->second.timer);
        if (it->second.listen_slot >= 0) me.downloads.release(it->second.listen_slot);
        me.active.erase(it);
    }
    for (PeerId q : me.neighbors) {
        auto m = std::make_shared<Message>();
        m->type = Message::Type::Have;
        m->chunk = chunk;
        send_message(p, q, std::move(m), params_.have_bytes);
    }
    if (on_piece) on_piece(p, chunk, via_multicast);
    if (mode_ == SwarmMode::Hybrid && me.island && !via_multicast && source && !same_island(p, *source)) {
        RandomEngine r = net_.random().substream("holdoff/" + std::to_string(p) + "/" + std::to_string(chunk));
        const auto holdoff = static_cast<SimTime>(uniform01(r) * static_cast<double>(params_.suppression_holdoff));
        const SimTime verified = net_.now();
        net_.sim().schedule_in(holdoff, [this, p, chunk, verified] { maybe_multicast(p, chunk, verified); });
    }
    if (me.have.complete() && !me.finish) me.finish = net_.now();
    pump(p);
}

void Swarm::give_piece(PeerId p, std::size_t chunk) {
    Peer& me = peer(p);
    if (me.have.mark_verified(file_.spec, chunk, *file_.pieces.at(chunk))) me.pieces[chunk] = file_.pieces[chunk];
}

void Swarm::learn(PeerId p, std::size_t chunk, PeerId holder) {
    peer(p).table.add(chunk, holder);
}

// ---------------------------------------------------------------------------
// island multicast

bool Swarm::same_island(PeerId a, PeerId b) const {
    const auto& ia = peer(a).island;
    const auto& ib = peer(b).island;
    return ia && ib && *ia == *ib;
}

void Swarm::multicast_control(PeerId p, bool island_have, std::size_t chunk) {
    const Peer& me = peer(p);
    if (!me.island) return;
    Packet pkt = control_packet(PacketKind::Control, params_.control_bytes, McControl{island_have, p, chunk});
    net_.send_multicast(me.node, *me.island, std::move(pkt), params_.multicast_ttl);
}

void Swarm::maybe_multicast(PeerId p, std::size_t chunk, SimTime) {
    Peer& me = peer(p);
    if (me.island_seen.count(chunk)) {
        ++stats_.multicasts_suppressed;
        return;
    }
    me.island_seen.insert(chunk);
    ++stats_.multicasts_started;
    const Topology& topo = net_.topology();
    const auto& spoke = topo.link(topo.adjacent(me.node).front().link);
    const SimTime ser = serialization_delay(kHeaderBytes + kPayloadBytes, spoke.bandwidth_bps);
    const auto interval = static_cast<SimTime>(static_cast<double>(ser) / params_.multicast_rate_fraction);
    auto segs = segment_payload(me.pieces[chunk], 0, me.pieces[chunk]->size(), file_.id, static_cast<std::int64_t>(chunk));
    const auto count = static_cast<std::uint32_t>(segs.size());
    const int group = *me.island;
    const NodeId origin = me.node;
    const SimTime lead = std::max(me.mc_free_at, net_.now()) - net_.now();
    me.mc_free_at = net_.now() + lead + interval * count;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto body = std::make_shared<const McData>(McData{p, chunk, i, count, segs[i]});
        net_.sim().schedule_in(lead + interval * i, [this, body, origin, group] {
            Packet pkt;
            pkt.kind = PacketKind::MulticastData;
            pkt.header_bytes = kHeaderBytes;
            pkt.payload_bytes = body->desc.length;
            pkt.fingerprint = body->desc.fingerprint;
            pkt.body = body;
            net_.send_multicast(origin, group, std::move(pkt), params_.multicast_ttl);
        });
    }
    net_.sim().schedule_in(lead + interval * count, [this, p, chunk] { multicast_control(p, true, chunk); });
}

void Swarm::on_group_packet(NodeId receiver, const Packet& pkt) {
    auto id = peer_at(receiver);
    if (!id) return;
    const PeerId q = *id;
    Peer& me = peer(q);
    if (const auto* ctl = std::any_cast<McControl>(&pkt.body)) {
        if (ctl->island_have)
            on_island_have(q, ctl->from, ctl->chunk);
        else
            on_claim(q, ctl->from, ctl->chunk);
        return;
    }
    const auto* data = std::any_cast<std::shared_ptr<const McData>>(&pkt.body);
    if (!data) return;
    const McData& d = **data;
    me.island_seen.insert(d.chunk);
    me.claims.erase(d.chunk);
    if (me.have.has(d.chunk)) return;
    me.table.add(d.chunk, d.from);
    auto [it, fresh] = me.partial.try_emplace(d.chunk);
    Partial& pa = it->second;
    if (fresh) {
        pa.buf.resize(file_.spec.piece_length(d.chunk));
        pa.got.assign(d.count, false);
    }
    pa.last = net_.now();
    if (d.index >= pa.got.size() || pa.got[d.index]) return;
    std::copy_n(d.desc.source->begin() + static_cast<std::ptrdiff_t>(d.desc.offset), d.desc.length,
                pa.buf.begin() + static_cast<std::ptrdiff_t>(d.desc.offset));
    pa.got[d.index] = true;
    me.bytes_received += d.desc.length;
    if (++pa.n_got < pa.got.size()) return;
    auto bytes = std::make_shared<const Bytes>(std::move(pa.buf));
    me.partial.erase(it);
    accept_piece(q, d.chunk, std::move(bytes), d.from, true);
}

void Swarm::on_claim(PeerId q, PeerId from, std::size_t chunk) {
    Peer& me = peer(q);
    if (me.have.has(chunk)) return;
    me.claims[chunk] = {from, net_.now()};
    auto it = me.active.find(chunk);
    if (it != me.active.end() && it->second.outside && it->second.stage == Request::Stage::Asking && from < q) {
        ++stats_.claim_conflicts;
        net_.sim().cancel(it->second.timer);
        me.active.erase(it);
        pump(q);
    }
}

void Swarm::on_island_have(PeerId q, PeerId from, std::size_t chunk) {
    Peer& me = peer(q);
    me.island_seen.insert(chunk);
    me.claims.erase(chunk);
    me.table.add(chunk, from);
    me.partial.erase(chunk);
    pump(q);
}

}  // namespace hcdn
