#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcdn/engine.hpp"
#include "hcdn/flow.hpp"
#include "hcdn/protocols/swarm.hpp"
#include "hcdn/rng.hpp"
#include "hcdn/topology.hpp"

namespace hcdn::testing {

/// Hop counts from `src` by plain BFS over the link graph.
inline std::vector<int> bfs_hops(const Topology& t, NodeId src) {
    std::vector<int> dist(t.node_count(), -1);
    std::deque<NodeId> q{src};
    dist[static_cast<std::size_t>(src)] = 0;
    while (!q.empty()) {
        const NodeId n = q.front();
        q.pop_front();
        for (const auto& adj : t.adjacent(n))
            if (dist[static_cast<std::size_t>(adj.neighbor)] < 0) {
                dist[static_cast<std::size_t>(adj.neighbor)] = dist[static_cast<std::size_t>(n)] + 1;
                q.push_back(adj.neighbor);
            }
    }
    return dist;
}

/// a -- b -- c, 10 Mb/s, 20 ms.
inline Topology line3(std::int64_t bps = 10'000'000, SimTime delay = from_millis(20), int queue = kDefaultQueueCapacity) {
    Topology t;
    t.add_node("a", NodeKind::Seeder);
    t.add_node("b", NodeKind::CoreRouter);
    t.add_node("c", NodeKind::Client);
    t.add_link("a", "b", bps, delay, queue, LinkKind::Access, "ab");
    t.add_link("b", "c", bps, delay, queue, LinkKind::Access, "bc");
    return t;
}

/// Two hosts on one link.
inline Topology pair(std::int64_t bps, SimTime delay, int queue = kDefaultQueueCapacity) {
    Topology t;
    t.add_node("s", NodeKind::Seeder);
    t.add_node("c", NodeKind::Client);
    t.add_link("s", "c", bps, delay, queue, LinkKind::Access, "sc");
    return t;
}

/// Random small network: 1-3 core routers in a full mesh, a seeder on one
/// of them, and 1..max_islands islands of 1-2 LANs with 1-3 clients each.
inline Topology random_topology(RandomEngine& rng, int max_islands = 2) {
    auto pick = [&](int lo, int hi) { return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1))); };
    Topology t;
    const int cores = pick(1, 3);
    for (int i = 0; i < cores; ++i) t.add_node("core" + std::to_string(i), NodeKind::CoreRouter);
    for (int i = 0; i < cores; ++i)
        for (int j = i + 1; j < cores; ++j)
            t.add_link("core" + std::to_string(i), "core" + std::to_string(j), 10'000'000, from_millis(pick(1, 20)), 50,
                       LinkKind::Core);
    t.add_node("seeder", NodeKind::Seeder);
    t.add_link("core" + std::to_string(pick(0, cores - 1)), "seeder", 2'000'000, from_millis(10), 50, LinkKind::Access);
    const int islands = pick(1, max_islands);
    int client = 0;
    int lan = 0;
    for (int i = 0; i < islands; ++i) {
        const std::string router = "router" + std::to_string(i);
        t.add_node(router, NodeKind::AccessRouter);
        t.add_link("core" + std::to_string(pick(0, cores - 1)), router, 2'000'000, from_millis(pick(1, 10)), 50,
                   LinkKind::Access);
        std::vector<std::string> lans;
        const int nl = pick(1, 2);
        for (int l = 0; l < nl; ++l) {
            const std::string sw = "lan" + std::to_string(lan++);
            t.add_node(sw, NodeKind::LanSwitch);
            t.add_link(router, sw, 10'000'000, 0, 50, LinkKind::Lan);
            std::vector<std::string> members;
            const int nc = pick(1, 3);
            for (int c = 0; c < nc; ++c) {
                const std::string id = "node" + std::to_string(client++);
                t.add_node(id, NodeKind::Client);
                t.add_link(sw, id, 10'000'000, 0, 50, LinkKind::Lan);
                members.push_back(id);
            }
            t.add_lan(sw, members);
            lans.push_back(sw);
        }
        t.add_island(router, lans);
    }
    t.validate();
    return t;
}

/// Three hosts R, A, B on a hub; every spoke is 1024 kb/s, 2 ms. A 64-byte
/// control message takes 0.5 ms per hop to serialize, so it lands 5 ms after
/// it is sent; a 1300-byte data packet lands 24.3125 ms after it is sent.
/// The file has two 1250-byte pieces.
struct HubScenario {
    Topology topo;
    RoutingTable routes;
    Simulator sim;
    RunRandom random{7};
    std::unique_ptr<Network> net;
    SharedFile file;
    std::unique_ptr<Swarm> swarm;
    static constexpr PeerId R = 0, A = 1, B = 2;

    HubScenario() {
        topo.add_node("hub", NodeKind::CoreRouter);
        for (const char* h : {"R", "A", "B"}) {
            topo.add_node(h, NodeKind::Client);
            topo.add_link("hub", h, 1'024'000, from_millis(2), 50, LinkKind::Access, std::string("hub-") + h);
        }
        topo.validate();
        routes = RoutingTable(topo);
        net = std::make_unique<Network>(sim, topo, routes, random);
        file = SharedFile::make(synthetic_file(2500, 99), 1250);
        SwarmParams params;
        params.port_pool_capacity = 1;
        params.handshake_timeout = from_millis(50);
        params.retry_backoff = from_millis(100);
        std::vector<Swarm::PeerSpec> peers{{topo.node_id("R"), false, {}}, {topo.node_id("A"), false, {}},
                                           {topo.node_id("B"), false, {}}};
        swarm = std::make_unique<Swarm>(*net, file, std::move(peers), params, SwarmMode::P2P, false);
    }
};

struct PieceArrival {
    SimTime time;
    PeerId peer;
    std::size_t chunk;
    friend bool operator==(const PieceArrival&, const PieceArrival&) = default;
};

/// Scripted run over HubScenario. R's table wrongly lists A for chunk 0 and
/// B holds both chunks. A fetches chunk 1 from B (reserving B's only slot)
/// while R is turned away by A (Type3a) and then by B (Type3b). From 200 ms
/// to 300 ms everything towards R is lost, so A's Type2 for chunk 1 never
/// arrives and both the request and the reservation time out.
inline std::vector<PieceArrival> run_golden(HubScenario& s) {
    using S = HubScenario;
    std::vector<PieceArrival> got;
    Swarm& sw = *s.swarm;
    sw.on_piece = [&](PeerId p, std::size_t c, bool) { got.push_back({s.sim.now(), p, c}); };
    sw.give_piece(S::B, 0);
    sw.give_piece(S::B, 1);
    sw.learn(S::R, 0, S::A);
    sw.learn(S::R, 0, S::B);
    sw.learn(S::R, 1, S::A);
    sw.learn(S::A, 1, S::B);
    const LinkId to_r = s.topo.link_id("hub-R");
    s.sim.schedule(0, [&] { sw.request_chunk(S::R, 0); });
    s.sim.schedule(from_millis(2), [&] { sw.request_chunk(S::A, 1); });
    s.sim.schedule(from_millis(200), [&, to_r] {
        s.net->set_loss(to_r, Direction::AtoB, 1.0);
        sw.request_chunk(S::R, 1);
    });
    s.sim.schedule(from_millis(300), [&, to_r] { s.net->set_loss(to_r, Direction::AtoB, 0.0); });
    s.sim.run_until(from_millis(1000));
    return got;
}

/// Hand-computed trace for run_golden.
inline std::vector<HandshakeTraceEntry> golden_trace() {
    using S = HubScenario;
    using E = HandshakeTraceEntry::Event;
    using K = HandshakeKind;
    auto sent = [](double ms, K k, PeerId from, PeerId to, std::size_t c, std::optional<int> port = std::nullopt) {
        return HandshakeTraceEntry{from_seconds(ms / 1000), E::Sent, k, from, to, c, port};
    };
    auto timer = [](double ms, E ev, PeerId from, PeerId to, std::size_t c) {
        return HandshakeTraceEntry{from_seconds(ms / 1000), ev, K::Type1, from, to, c, std::nullopt};
    };
    return {
        sent(0, K::Type1, S::R, S::A, 0),
        sent(2, K::Type1, S::A, S::B, 1),
        sent(5, K::Type3a, S::A, S::R, 0),
        sent(7, K::Type2, S::B, S::A, 1, 0),
        sent(10, K::Type1, S::R, S::B, 0),
        sent(12, K::Type4, S::A, S::B, 1, 0),
        sent(15, K::Type3b, S::B, S::R, 0),
        sent(120, K::Type1, S::R, S::B, 0),
        sent(125, K::Type2, S::B, S::R, 0, 0),
        sent(130, K::Type4, S::R, S::B, 0, 0),
        sent(200, K::Type1, S::R, S::A, 1),
        sent(205, K::Type2, S::A, S::R, 1, 0),
        timer(250, E::RequestTimeout, S::R, S::A, 1),
        timer(255, E::ReservationExpired, S::A, S::R, 1),
        sent(350, K::Type1, S::R, S::A, 1),
        sent(355, K::Type2, S::A, S::R, 1, 0),
        sent(360, K::Type4, S::R, S::A, 1, 0),
    };
}

/// Data lands one control hop after Type4 plus 24.3125 ms.
inline std::vector<PieceArrival> golden_arrivals() {
    using S = HubScenario;
    return {{from_seconds(0.0413125), S::A, 1}, {from_seconds(0.1593125), S::R, 0}, {from_seconds(0.3893125), S::R, 1}};
}

}  // namespace hcdn::testing
