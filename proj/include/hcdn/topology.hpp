#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hcdn/types.hpp"

namespace hcdn {

enum class NodeKind : std::uint8_t { Client, AccessRouter, CoreRouter, Seeder, LanSwitch };
enum class LinkKind : std::uint8_t { Core, Access, Lan };

std::string_view to_string(NodeKind k);
std::string_view to_string(LinkKind k);
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<LinkKind> parse_link_kind(std::string_view s);

/// End hosts terminate traffic; everything else forwards it.
constexpr bool is_end_host(NodeKind k) { return k == NodeKind::Client || k == NodeKind::Seeder; }

struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::Client;
    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct LinkSpec {
    std::string name;
    NodeId a = -1;
    NodeId b = -1;
    std::int64_t bandwidth_bps = 0;
    SimTime propagation_delay = 0;
    int queue_capacity = 50;
    LinkKind kind = LinkKind::Core;

    NodeId source(Direction d) const { return d == Direction::AtoB ? a : b; }
    NodeId target(Direction d) const { return d == Direction::AtoB ? b : a; }
    friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
};

struct LanSpec {
    NodeId switch_node = -1;  // the LAN is named after its switch
    std::vector<NodeId> members;
    friend bool operator==(const LanSpec&, const LanSpec&) = default;
};

struct IslandSpec {
    NodeId router = -1;
    std::vector<int> lans;  // indices into Topology::lans()
    friend bool operator==(const IslandSpec&, const IslandSpec&) = default;
};

struct Adjacency {
    LinkId link;
    Direction dir;  // direction used when leaving this node over `link`
    NodeId neighbor;
};

inline constexpr int kDefaultQueueCapacity = 50;

/// Immutable network graph. Built incrementally through the add_* calls and
/// then sealed by validate(); after that it is only read.
class Topology {
public:
    NodeId add_node(std::string id, NodeKind kind);
    LinkId add_link(std::string_view a, std::string_view b, std::int64_t bandwidth_bps, SimTime delay,
                    int queue_capacity = kDefaultQueueCapacity, std::optional<LinkKind> kind = std::nullopt,
                    std::string name = {});
    int add_lan(std::string_view switch_id, const std::vector<std::string>& members);
    int add_island(std::string_view router_id, const std::vector<std::string>& lan_ids);

    /// Checks every structural invariant; throws TopologyError on the first violation.
    void validate() const;

    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const std::vector<LinkSpec>& links() const { return links_; }
    const std::vector<LanSpec>& lans() const { return lans_; }
    const std::vector<IslandSpec>& islands() const { return islands_; }
    const std::vector<Adjacency>& adjacent(NodeId n) const { return adjacency_.at(static_cast<std::size_t>(n)); }

    std::size_t node_count() const { return nodes_.size(); }
    const NodeSpec& node(NodeId n) const { return nodes_.at(static_cast<std::size_t>(n)); }
    const LinkSpec& link(LinkId l) const { return links_.at(static_cast<std::size_t>(l)); }

    std::optional<NodeId> find_node(std::string_view id) const;
    NodeId node_id(std::string_view id) const;  // throws TopologyError when absent
    std::optional<LinkId> find_link(std::string_view name) const;
    LinkId link_id(std::string_view name) const;

    /// "a->b" label for one direction of a link.
    std::string direction_label(LinkId l, Direction d) const;

    std::vector<NodeId> nodes_of_kind(NodeKind k) const;
    std::vector<NodeId> clients() const { return nodes_of_kind(NodeKind::Client); }

    /// Island index of an end host or LAN switch, if it sits inside one.
    std::optional<int> island_of(NodeId n) const;
    std::optional<int> lan_of(NodeId n) const;
    std::vector<NodeId> island_members(int island) const;

    friend bool operator==(const Topology& x, const Topology& y) {
        return x.nodes_ == y.nodes_ && x.links_ == y.links_ && x.lans_ == y.lans_ && x.islands_ == y.islands_;
    }

private:
    std::vector<NodeSpec> nodes_;
    std::vector<LinkSpec> links_;
    std::vector<LanSpec> lans_;
    std::vector<IslandSpec> islands_;
    std::vector<std::vector<Adjacency>> adjacency_;
    std::unordered_map<std::string, NodeId> node_index_;
    std::unordered_map<std::string, LinkId> link_index_;
};

class TopologyError : public ConfigError {
public:
    explicit TopologyError(const std::string& msg, int line = 0);
    int line() const { return line_; }

private:
    int line_;
};

/// The four-core-router, three-island, 36-client testbed with a seeder hung
/// off coreRouter3.
Topology build_paper_topology();

Topology parse_topology(std::string_view text);
std::string serialize_topology(const Topology& t);

/// Static minimal-hop routes for every ordered node pair. The route for the
/// canonical pair (lower node id first) picks the lexicographically smallest
/// next-hop id at each tie; the opposite direction is its exact reverse.
class RoutingTable {
public:
    RoutingTable() = default;
    explicit RoutingTable(const Topology& t);

    const std::vector<Hop>& route(NodeId src, NodeId dst) const {
        return routes_[static_cast<std::size_t>(src) * n_ + static_cast<std::size_t>(dst)];
    }
    int hops(NodeId src, NodeId dst) const { return static_cast<int>(route(src, dst).size()); }
    std::size_t node_count() const { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<std::vector<Hop>> routes_;
};

RoutingTable compute_routes(const Topology& t);

/// Lowest bandwidth along a route, or 0 for an empty route.
std::int64_t bottleneck_bps(const Topology& t, const std::vector<Hop>& route);

/// Whether a multicast copy held by `from` with remaining TTL `ttl_after_decrement`
/// may be forwarded to neighbor `to`. Core routers never forward and access
/// routers never hand multicast to the core or to another island's router.
bool multicast_edge_allowed(const Topology& t, NodeId from, NodeId to, int ttl_after_decrement);

/// End hosts that a multicast datagram sent by `origin` with the given TTL
/// reaches, origin included (empty when ttl <= 0). Forwarding follows the
/// reverse-path tree of the static routes.
std::vector<NodeId> multicast_scope(const Topology& t, const RoutingTable& routes, NodeId origin, int ttl);
std::vector<NodeId> multicast_scope(const Topology& t, NodeId origin, int ttl);

}  // namespace hcdn
