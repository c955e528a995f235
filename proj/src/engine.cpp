#include "hcdn/engine.hpp"

#include <string>

namespace hcdn {

// ---------------------------------------------------------------------------
// Simulator

EventId Simulator::schedule(SimTime at, std::function<void()> action) {
    if (at < now_)
        throw SimulationError("cannot schedule at t=" + std::to_string(at) + "ns before now=" + std::to_string(now_) + "ns");
    const EventId id = next_ordinal_++;
    queue_.push(Entry{at, id, std::move(action)});
    return id;
}

void Simulator::cancel(EventId id) {
    if (id < next_ordinal_) cancelled_.insert(id);
}

bool Simulator::step() {
    while (!queue_.empty()) {
        const Entry& top = queue_.top();
        if (auto it = cancelled_.find(top.ordinal); it != cancelled_.end()) {
            cancelled_.erase(it);
            queue_.pop();
            continue;
        }
        auto action = std::move(top.action);
        now_ = top.time;
        trace_ = hash_combine(trace_, hash_combine(static_cast<std::uint64_t>(top.time), top.ordinal));
        queue_.pop();
        ++fired_;
        action();
        return true;
    }
    return false;
}

void Simulator::run() {
    while (step()) {
    }
}

void Simulator::run_until(SimTime until) {
    while (!queue_.empty()) {
        const Entry& top = queue_.top();
        if (cancelled_.count(top.ordinal)) {
            cancelled_.erase(top.ordinal);
            queue_.pop();
            continue;
        }
        if (top.time > until) break;
        step();
    }
    if (now_ < until) now_ = until;
}

// ---------------------------------------------------------------------------
// Packets

std::string_view to_string(PacketKind k) {
    switch (k) {
        case PacketKind::Data: return "data";
        case PacketKind::Ack: return "ack";
        case PacketKind::Control: return "control";
        case PacketKind::MulticastData: return "multicast-data";
        case PacketKind::Cbr: return "cbr";
    }
    return "?";
}

Packet control_packet(PacketKind kind, std::uint32_t size, std::any body) {
    Packet p;
    p.kind = kind;
    p.header_bytes = size;
    p.payload_bytes = 0;
    p.body = std::move(body);
    return p;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(Simulator& sim, const Topology& topology, const RoutingTable& routes, const RunRandom& random)
    : sim_(sim), topo_(topology), routes_(routes), random_(random), channels_(topology.links().size() * 2) {}

void Network::send(Packet p, Handler on_arrival) {
    p.id = next_packet_id_++;
    if (p.src == p.dst) {
        on_arrival(p);
        return;
    }
    const auto& route = routes_.route(p.src, p.dst);
    forward_unicast(std::move(p), std::make_shared<const Handler>(std::move(on_arrival)), &route, 0);
}

void Network::forward_unicast(Packet p, std::shared_ptr<const Handler> handler, const std::vector<Hop>* route,
                              std::size_t hop) {
    const Hop h = (*route)[hop];
    transmit(std::move(p), h.link, h.dir, [this, handler, route, hop](const Packet& arrived) {
        if (hop + 1 == route->size()) {
            (*handler)(arrived);
        } else {
            forward_unicast(arrived, handler, route, hop + 1);
        }
    });
}

void Network::transmit(Packet p, LinkId link, Direction dir, Handler on_far_end) {
    auto& ch = channel(link, dir);
    for (auto* obs : observers_) obs->on_admit(*this, link, dir, p);
    ch.stats.packets_in += 1;
    ch.stats.bytes_in += p.size();
    sim_.mix_trace(hash_combine(p.id, (static_cast<std::uint64_t>(link) << 1) | static_cast<std::uint64_t>(index_of(dir))));

    const auto capacity = static_cast<std::size_t>(topo_.link(link).queue_capacity);
    if (ch.queue.size() >= capacity) {
        ch.stats.queue_drops += 1;
        for (auto* obs : observers_) obs->on_drop(*this, link, dir, p, DropCause::QueueFull);
        return;
    }
    ch.queue.push_back(Transit{std::move(p), std::move(on_far_end)});
    ch.stats.queued = ch.queue.size();
    if (!ch.busy) start_service(link, dir);
}

void Network::start_service(LinkId link, Direction dir) {
    auto& ch = channel(link, dir);
    ch.busy = true;
    const auto delay = serialization_delay(ch.queue.front().packet.size(), topo_.link(link).bandwidth_bps);
    sim_.schedule_in(delay, [this, link, dir] { finish_service(link, dir); });
}

void Network::finish_service(LinkId link, Direction dir) {
    auto& ch = channel(link, dir);
    Transit t = std::move(ch.queue.front());
    ch.queue.pop_front();
    ch.stats.queued = ch.queue.size();
    ch.busy = false;
    if (!ch.queue.empty()) start_service(link, dir);

    if (ch.loss_rate > 0.0) {
        if (!ch.loss_rng)
            ch.loss_rng.emplace(random_.substream("loss/" + topo_.link(link).name + "/" + std::to_string(index_of(dir))));
        if (uniform01(*ch.loss_rng) < ch.loss_rate) {
            ch.stats.loss_drops += 1;
            for (auto* obs : observers_) obs->on_drop(*this, link, dir, t.packet, DropCause::InducedLoss);
            return;
        }
    }
    ch.stats.delivered += 1;
    sim_.schedule_in(topo_.link(link).propagation_delay,
                     [transit = std::move(t)]() mutable { transit.on_far_end(transit.packet); });
}

void Network::set_loss(LinkId link, Direction dir, double rate) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("loss rate must be within [0, 1], got " + std::to_string(rate));
    channel(link, dir).loss_rate = rate;
}

void Network::subscribe(GroupId group, NodeId host) {
    auto& m = members_[group];
    if (m.empty()) m.assign(topo_.node_count(), false);
    m[static_cast<std::size_t>(host)] = true;
    for (auto it = trees_.begin(); it != trees_.end();) {
        if (it->first.first == group)
            it = trees_.erase(it);
        else
            ++it;
    }
}

void Network::set_group_handler(GroupId group, GroupHandler handler) { group_handlers_[group] = std::move(handler); }

const Network::Tree& Network::tree_for(GroupId group, NodeId origin) {
    const auto key = std::make_pair(group, origin);
    if (auto it = trees_.find(key); it != trees_.end()) return it->second;

    Tree tree;
    tree.children.resize(topo_.node_count());
    const auto& members = members_[group];
    std::vector<bool> on_tree(topo_.node_count(), false);
    for (std::size_t y = 0; y < members.size(); ++y) {
        if (!members[y] || static_cast<NodeId>(y) == origin) continue;
        for (const Hop& h : routes_.route(origin, static_cast<NodeId>(y))) {
            const NodeId to = topo_.link(h.link).target(h.dir);
            if (on_tree[to]) continue;
            on_tree[to] = true;
            tree.children[topo_.link(h.link).source(h.dir)].push_back(h);
        }
    }
    return trees_.emplace(key, std::move(tree)).first->second;
}

void Network::send_multicast(NodeId origin, GroupId group, Packet p, int ttl) {
    if (ttl <= 0) return;
    p.id = next_packet_id_++;
    p.src = origin;
    p.group = group;
    p.ttl = ttl;
    const Tree& tree = tree_for(group, origin);
    for (const Hop& h : tree.children[origin]) {
        const NodeId to = topo_.link(h.link).target(h.dir);
        if (topo_.node(to).kind == NodeKind::CoreRouter) continue;
        transmit(p, h.link, h.dir, [this, to, origin, group](const Packet& arrived) {
            forward_multicast(to, origin, arrived, tree_for(group, origin));
        });
    }
}

void Network::forward_multicast(NodeId at, NodeId origin, Packet p, const Tree& tree) {
    if (is_end_host(topo_.node(at).kind)) {
        const auto& members = members_[p.group];
        if (!members.empty() && members[at])
            if (auto it = group_handlers_.find(p.group); it != group_handlers_.end()) it->second(at, p);
        return;
    }
    if (p.ttl < 1) return;
    const int next_ttl = p.ttl - 1;
    const GroupId group = p.group;
    for (const Hop& h : tree.children[at]) {
        const NodeId to = topo_.link(h.link).target(h.dir);
        if (!multicast_edge_allowed(topo_, at, to, next_ttl)) continue;
        Packet copy = p;
        copy.ttl = next_ttl;
        transmit(std::move(copy), h.link, h.dir, [this, to, origin, group](const Packet& arrived) {
            forward_multicast(to, origin, arrived, tree_for(group, origin));
        });
    }
}

}  // namespace hcdn
