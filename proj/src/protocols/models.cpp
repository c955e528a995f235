#include "hcdn/protocols/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hcdn {

std::string_view to_string(ModelKind m) {
    switch (m) {
        case ModelKind::Www: return "www";
        case ModelKind::P2P: return "p2p";
        case ModelKind::Hybrid: return "hybrid";
    }
    return "?";
}

ModelKind parse_model(std::string_view s) {
    if (s == "www") return ModelKind::Www;
    if (s == "p2p") return ModelKind::P2P;
    if (s == "hybrid") return ModelKind::Hybrid;
    throw ConfigError("unknown model '" + std::string(s) + "' (expected www, p2p or hybrid)");
}

std::vector<LinkId> spoke_links(const Topology& topo) {
    std::vector<LinkId> out;
    for (std::size_t i = 0; i < topo.links().size(); ++i) {
        const auto& l = topo.links()[i];
        if (l.kind != LinkKind::Lan) continue;
        if (is_end_host(topo.node(l.a).kind) || is_end_host(topo.node(l.b).kind)) out.push_back(static_cast<LinkId>(i));
    }
    return out;
}

NodeId seeder_node(const Topology& topo) {
    auto s = topo.nodes_of_kind(NodeKind::Seeder);
    if (s.size() != 1) throw ConfigError("topology must have exactly one seeder, found " + std::to_string(s.size()));
    return s.front();
}

namespace {

void drive(Simulator& sim, SimTime limit, const std::function<bool()>& done) {
    bool stop = false;
    const EventId ev = sim.schedule(std::max(limit, sim.now()), [&stop] { stop = true; });
    while (!stop && !done() && sim.step()) {
    }
    sim.cancel(ev);
}

ModelOutcome run_swarm(Network& net, const SharedFile& file, NodeId seeder, const std::vector<ClientStart>& clients,
                       const SwarmParams& params, SimTime limit, SwarmMode mode) {
    std::vector<Swarm::PeerSpec> specs;
    specs.push_back({seeder, true, std::nullopt});
    for (const auto& c : clients) specs.push_back({c.node, false, c.start});
    Swarm swarm(net, file, std::move(specs), params, mode, true);
    swarm.launch();
    swarm.run(limit);
    ModelOutcome out;
    out.records = swarm.records();
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const auto id = static_cast<PeerId>(i + 1);
        out.files.push_back(swarm.have(id).complete() ? std::optional<Bytes>(swarm.assembled(id)) : std::nullopt);
    }
    out.swarm = swarm.stats();
    out.tables_truthful = swarm.tables_truthful();
    return out;
}

}  // namespace

ModelOutcome run_www(Network& net, const SharedFile& file, NodeId seeder, const std::vector<ClientStart>& clients,
                     const FlowOptions& opts, SimTime limit) {
    struct State {
        DownloadRecord record;
        std::shared_ptr<Bytes> buffer;
        bool done = false;
        std::shared_ptr<ReliableFlow> flow;
    };
    std::vector<State> st(clients.size());
    std::size_t finished = 0;
    const auto segments = segment_payload(file.content, 0, file.content->size(), file.id, -1);
    for (std::size_t i = 0; i < clients.size(); ++i) {
        st[i].record.client = net.topology().node(clients[i].node).id;
        st[i].record.start = clients[i].start;
        st[i].buffer = std::make_shared<Bytes>(file.content->size());
        net.sim().schedule(std::max(clients[i].start, net.now()), [&, i] {
            State& s = st[i];
            FlowCallbacks cb;
            cb.on_deliver = [&s](const PayloadDescriptor& d) {
                std::copy_n(d.source->begin() + static_cast<std::ptrdiff_t>(d.offset), d.length,
                            s.buffer->begin() + static_cast<std::ptrdiff_t>(d.offset));
                s.record.bytes_received += d.length;
            };
            cb.on_receiver_complete = [&s, &net, &file, &finished](const FlowResult& r) {
                s.record.retransmissions = r.retransmissions;
                s.done = true;
                ++finished;
                if (!r.ok) return;
                PieceMap check(file.spec.piece_count());
                for (std::size_t c = 0; c < file.spec.piece_count(); ++c) {
                    const auto off = static_cast<std::ptrdiff_t>(c * file.spec.piece_size);
                    check.mark_verified(file.spec, c,
                                        std::span<const std::uint8_t>(s.buffer->data() + off, file.spec.piece_length(c)));
                }
                if (check.complete()) s.record.finish = net.now();
            };
            s.flow = flow_send(net, seeder, clients[i].node, segments, opts, std::move(cb));
        });
    }
    drive(net.sim(), limit, [&] { return finished == clients.size(); });
    ModelOutcome out;
    for (auto& s : st) {
        out.files.push_back(s.record.completed() ? std::optional<Bytes>(*s.buffer) : std::nullopt);
        out.records.push_back(std::move(s.record));
    }
    return out;
}

ModelOutcome run_p2p(Network& net, const SharedFile& file, NodeId seeder, const std::vector<ClientStart>& clients,
                     const SwarmParams& params, SimTime limit) {
    return run_swarm(net, file, seeder, clients, params, limit, SwarmMode::P2P);
}

ModelOutcome run_hybrid(Network& net, const SharedFile& file, NodeId seeder, const std::vector<ClientStart>& clients,
                        const SwarmParams& params, SimTime limit) {
    return run_swarm(net, file, seeder, clients, params, limit, SwarmMode::Hybrid);
}

RunResult run_scenario(const Topology& topo, const ScenarioConfig& cfg) {
    const RoutingTable routes(topo);
    return run_scenario(topo, routes, cfg);
}

RunResult run_scenario(const Topology& topo, const RoutingTable& routes, const ScenarioConfig& cfg) {
    if (cfg.file_size == 0) throw ConfigError("file size must be positive");
    if (cfg.piece_size == 0) throw ConfigError("piece size must be positive");
    if (!(cfg.loss >= 0.0 && cfg.loss <= 1.0)) throw ConfigError("loss must be within [0, 1]");
    if (!(cfg.cbr >= 0.0 && cfg.cbr < 1.0)) throw ConfigError("cbr must be within [0, 1)");
    if (cfg.join_window < 0) throw ConfigError("join window must be non-negative");
    const NodeId seeder = seeder_node(topo);

    RunRandom random(cfg.seed);
    auto file = std::make_shared<const SharedFile>(
        SharedFile::make(synthetic_file(cfg.file_size, hash_combine(cfg.seed, 0xf11e)), cfg.piece_size));

    Simulator sim;
    Network net(sim, topo, routes, random);
    auto ledger = std::make_shared<LinkLedger>(topo, cfg.keep_fingerprint_log);
    net.add_observer(ledger.get());

    if (cfg.loss > 0)
        for (LinkId l : spoke_links(topo)) {
            net.set_loss(l, Direction::AtoB, cfg.loss);
            net.set_loss(l, Direction::BtoA, cfg.loss);
        }

    std::vector<NodeId> nodes = cfg.clients ? *cfg.clients : topo.clients();
    RandomEngine join = random.substream("join");
    std::vector<ClientStart> clients;
    for (NodeId n : nodes) {
        if (topo.node(n).kind != NodeKind::Client) throw ConfigError(topo.node(n).id + " is not a client");
        const auto offset = static_cast<SimTime>(uniform01(join) * static_cast<double>(cfg.join_window));
        clients.push_back({n, offset});
    }

    std::vector<std::shared_ptr<CbrSource>> cross;
    if (cfg.cbr > 0) {
        RandomEngine pick = random.substream("cbr");
        for (std::size_t i = 0; i < topo.islands().size(); ++i) {
            auto members = topo.island_members(static_cast<int>(i));
            std::erase_if(members, [&](NodeId n) { return topo.node(n).kind != NodeKind::Client; });
            if (members.size() < 2) continue;
            const std::size_t a = uniform_index(pick, members.size());
            std::size_t b = uniform_index(pick, members.size() - 1);
            if (b >= a) ++b;
            cross.push_back(start_cbr(net, members[a], members[b], cfg.cbr, kHeaderBytes + kPayloadBytes, pick));
        }
    }

    ModelOutcome outcome;
    switch (cfg.model) {
        case ModelKind::Www: outcome = run_www(net, *file, seeder, clients, cfg.www_flow, cfg.time_limit); break;
        case ModelKind::P2P: outcome = run_p2p(net, *file, seeder, clients, cfg.swarm, cfg.time_limit); break;
        case ModelKind::Hybrid: outcome = run_hybrid(net, *file, seeder, clients, cfg.swarm, cfg.time_limit); break;
    }
    for (auto& c : cross)
        if (c) c->stop();

    RunResult res;
    res.model = cfg.model;
    res.records = std::move(outcome.records);
    res.ledger = ledger;
    res.file = file;
    res.swarm = outcome.swarm;
    res.tables_truthful = outcome.tables_truthful;
    for (std::size_t i = 0; i < outcome.files.size(); ++i) {
        const auto& f = outcome.files[i];
        if (res.records[i].completed() && (!f || *f != *file->content)) res.integrity_ok = false;
    }
    if (cfg.keep_files) res.files = std::move(outcome.files);
    res.trace_hash = sim.trace_hash();
    res.end_time = sim.now();
    return res;
}

}  // namespace hcdn
