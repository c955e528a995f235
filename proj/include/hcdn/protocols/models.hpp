#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "hcdn/engine.hpp"
#include "hcdn/flow.hpp"
#include "hcdn/metrics.hpp"
#include "hcdn/protocols/swarm.hpp"
#include "hcdn/topology.hpp"

namespace hcdn {

enum class ModelKind : std::uint8_t { Www, P2P, Hybrid };

std::string_view to_string(ModelKind m);
ModelKind parse_model(std::string_view s);  // throws ConfigError

struct ClientStart {
    NodeId node = -1;
    SimTime start = 0;
};

struct ModelOutcome {
    std::vector<DownloadRecord> records;       // one per client, in input order
    std::vector<std::optional<Bytes>> files;   // assembled file per client, when completed
    SwarmStats swarm;                          // zero for www
    bool tables_truthful = true;
};

/// Every client fetches the whole file from the seeder over its own
/// reliable flow.
ModelOutcome run_www(Network& net, const SharedFile& file, NodeId seeder, const std::vector<ClientStart>& clients,
                     const FlowOptions& opts, SimTime limit);

ModelOutcome run_p2p(Network& net, const SharedFile& file, NodeId seeder, const std::vector<ClientStart>& clients,
                     const SwarmParams& params, SimTime limit);

/// Swarm plus island multicast of pieces fetched from outside the island.
ModelOutcome run_hybrid(Network& net, const SharedFile& file, NodeId seeder, const std::vector<ClientStart>& clients,
                        const SwarmParams& params, SimTime limit);

/// One complete simulation run on a topology.
struct ScenarioConfig {
    ModelKind model = ModelKind::Hybrid;
    std::size_t file_size = 1 << 20;
    std::size_t piece_size = kDefaultPieceSize;
    std::uint64_t seed = 1;
    double loss = 0.0;  // on every LAN spoke, both directions
    double cbr = 0.0;   // fraction of path bottleneck, two clients per island
    SimTime join_window = from_seconds(1);
    SimTime time_limit = from_seconds(3600);
    SwarmParams swarm;
    FlowOptions www_flow;
    std::optional<std::vector<NodeId>> clients;  // default: every client node
    bool keep_fingerprint_log = false;
    bool keep_files = false;
};

struct RunResult {
    ModelKind model = ModelKind::Hybrid;
    std::vector<DownloadRecord> records;
    std::shared_ptr<LinkLedger> ledger;
    std::shared_ptr<const SharedFile> file;
    std::vector<std::optional<Bytes>> files;  // filled when keep_files
    bool integrity_ok = true;  // every completed client's file equals the seeder's
    bool tables_truthful = true;
    SwarmStats swarm;
    std::uint64_t trace_hash = 0;
    SimTime end_time = 0;
};

/// Validates the config, builds network and ledger, applies loss and cross
/// traffic, runs the model. Throws ConfigError for invalid settings.
RunResult run_scenario(const Topology& topo, const RoutingTable& routes, const ScenarioConfig& cfg);
RunResult run_scenario(const Topology& topo, const ScenarioConfig& cfg);

/// LAN links with an end host at one side.
std::vector<LinkId> spoke_links(const Topology& topo);

NodeId seeder_node(const Topology& topo);  // throws ConfigError unless exactly one seeder

}  // namespace hcdn
