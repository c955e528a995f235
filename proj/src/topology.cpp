#include "hcdn/topology.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

namespace hcdn {

namespace {

constexpr std::pair<NodeKind, std::string_view> kNodeKinds[] = {
    {NodeKind::Client, "client"},
    {NodeKind::AccessRouter, "access-router"},
    {NodeKind::CoreRouter, "core-router"},
    {NodeKind::Seeder, "seeder"},
    {NodeKind::LanSwitch, "lan-switch"},
};

constexpr std::pair<LinkKind, std::string_view> kLinkKinds[] = {
    {LinkKind::Core, "core"},
    {LinkKind::Access, "access"},
    {LinkKind::Lan, "lan"},
};

bool valid_identifier(std::string_view id) {
    if (id.empty()) return false;
    return std::none_of(id.begin(), id.end(), [](char c) {
        return c == ',' || c == '=' || c == '#' || c == ' ' || c == '\t' || c == '\r' || c == '\n';
    });
}

LinkKind infer_link_kind(NodeKind a, NodeKind b) {
    if (a == NodeKind::CoreRouter && b == NodeKind::CoreRouter) return LinkKind::Core;
    if (a == NodeKind::LanSwitch || b == NodeKind::LanSwitch) return LinkKind::Lan;
    return LinkKind::Access;
}

}  // namespace

std::string_view to_string(NodeKind k) {
    for (auto [kind, name] : kNodeKinds)
        if (kind == k) return name;
    return "?";
}

std::string_view to_string(LinkKind k) {
    for (auto [kind, name] : kLinkKinds)
        if (kind == k) return name;
    return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    for (auto [kind, name] : kNodeKinds)
        if (name == s) return kind;
    return std::nullopt;
}

std::optional<LinkKind> parse_link_kind(std::string_view s) {
    for (auto [kind, name] : kLinkKinds)
        if (name == s) return kind;
    return std::nullopt;
}

TopologyError::TopologyError(const std::string& msg, int line)
    : ConfigError(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

// ---------------------------------------------------------------------------
// Topology

NodeId Topology::add_node(std::string id, NodeKind kind) {
    if (!valid_identifier(id)) throw TopologyError("invalid node id '" + id + "'");
    if (node_index_.count(id)) throw TopologyError("duplicate node id '" + id + "'");
    const auto n = static_cast<NodeId>(nodes_.size());
    node_index_.emplace(id, n);
    nodes_.push_back({std::move(id), kind});
    adjacency_.emplace_back();
    return n;
}

LinkId Topology::add_link(std::string_view a, std::string_view b, std::int64_t bandwidth_bps, SimTime delay,
                          int queue_capacity, std::optional<LinkKind> kind, std::string name) {
    const NodeId na = node_id(a);
    const NodeId nb = node_id(b);
    if (na == nb) throw TopologyError("self-loop link on '" + std::string(a) + "'");
    if (bandwidth_bps <= 0) throw TopologyError("link " + std::string(a) + "-" + std::string(b) + ": bandwidth must be > 0");
    if (delay < 0) throw TopologyError("link " + std::string(a) + "-" + std::string(b) + ": negative delay");
    if (queue_capacity < 1) throw TopologyError("link " + std::string(a) + "-" + std::string(b) + ": queue must be >= 1");
    if (name.empty()) name = std::string(a) + "-" + std::string(b);
    if (!valid_identifier(name)) throw TopologyError("invalid link name '" + name + "'");
    if (link_index_.count(name)) throw TopologyError("duplicate link name '" + name + "'");

    const auto l = static_cast<LinkId>(links_.size());
    LinkSpec spec;
    spec.name = name;
    spec.a = na;
    spec.b = nb;
    spec.bandwidth_bps = bandwidth_bps;
    spec.propagation_delay = delay;
    spec.queue_capacity = queue_capacity;
    spec.kind = kind.value_or(infer_link_kind(nodes_[na].kind, nodes_[nb].kind));
    links_.push_back(std::move(spec));
    link_index_.emplace(std::move(name), l);
    adjacency_[na].push_back({l, Direction::AtoB, nb});
    adjacency_[nb].push_back({l, Direction::BtoA, na});
    return l;
}

int Topology::add_lan(std::string_view switch_id, const std::vector<std::string>& members) {
    LanSpec lan;
    lan.switch_node = node_id(switch_id);
    if (nodes_[lan.switch_node].kind != NodeKind::LanSwitch)
        throw TopologyError("lan '" + std::string(switch_id) + "' must name a lan-switch node");
    for (const auto& m : members) lan.members.push_back(node_id(m));
    lans_.push_back(std::move(lan));
    return static_cast<int>(lans_.size()) - 1;
}

int Topology::add_island(std::string_view router_id, const std::vector<std::string>& lan_ids) {
    IslandSpec island;
    island.router = node_id(router_id);
    if (nodes_[island.router].kind != NodeKind::AccessRouter)
        throw TopologyError("island '" + std::string(router_id) + "' must name an access-router node");
    for (const auto& id : lan_ids) {
        const NodeId sw = node_id(id);
        auto it = std::find_if(lans_.begin(), lans_.end(), [&](const LanSpec& l) { return l.switch_node == sw; });
        if (it == lans_.end()) throw TopologyError("island '" + std::string(router_id) + "' references undeclared lan '" + id + "'");
        island.lans.push_back(static_cast<int>(it - lans_.begin()));
    }
    islands_.push_back(std::move(island));
    return static_cast<int>(islands_.size()) - 1;
}

void Topology::validate() const {
    if (nodes_.empty()) throw TopologyError("topology has no nodes");

    // connectivity
    std::vector<bool> seen(nodes_.size(), false);
    std::deque<NodeId> frontier{0};
    seen[0] = true;
    while (!frontier.empty()) {
        const NodeId n = frontier.front();
        frontier.pop_front();
        for (const auto& adj : adjacency_[n])
            if (!seen[adj.neighbor]) {
                seen[adj.neighbor] = true;
                frontier.push_back(adj.neighbor);
            }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!seen[i]) throw TopologyError("disconnected graph: '" + nodes_[i].id + "' unreachable from '" + nodes_[0].id + "'");

    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (is_end_host(nodes_[i].kind) && adjacency_[i].size() != 1)
            throw TopologyError("end host '" + nodes_[i].id + "' must attach through exactly one link");

    std::set<NodeId> lan_members;
    for (const auto& lan : lans_) {
        for (NodeId m : lan.members) {
            if (!is_end_host(nodes_[m].kind))
                throw TopologyError("lan '" + nodes_[lan.switch_node].id + "' member '" + nodes_[m].id + "' is not an end host");
            if (!lan_members.insert(m).second)
                throw TopologyError("node '" + nodes_[m].id + "' belongs to more than one lan");
            const auto& adj = adjacency_[m];
            if (adj.empty() || adj.front().neighbor != lan.switch_node)
                throw TopologyError("lan member '" + nodes_[m].id + "' is not attached to switch '" + nodes_[lan.switch_node].id + "'");
        }
    }

    std::vector<int> lan_owner(lans_.size(), -1);
    for (std::size_t i = 0; i < islands_.size(); ++i) {
        if (islands_[i].lans.empty()) throw TopologyError("island '" + nodes_[islands_[i].router].id + "' has no lans");
        for (int lan : islands_[i].lans) {
            if (lan_owner[lan] != -1)
                throw TopologyError("lan '" + nodes_[lans_[lan].switch_node].id + "' belongs to more than one island");
            lan_owner[lan] = static_cast<int>(i);
        }
    }
    if (!islands_.empty())
        for (std::size_t l = 0; l < lans_.size(); ++l)
            if (lan_owner[l] == -1) throw TopologyError("lan '" + nodes_[lans_[l].switch_node].id + "' belongs to no island");
}

std::optional<NodeId> Topology::find_node(std::string_view id) const {
    auto it = node_index_.find(std::string(id));
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
}

NodeId Topology::node_id(std::string_view id) const {
    if (auto n = find_node(id)) return *n;
    throw TopologyError("undeclared node '" + std::string(id) + "'");
}

std::optional<LinkId> Topology::find_link(std::string_view name) const {
    auto it = link_index_.find(std::string(name));
    if (it == link_index_.end()) return std::nullopt;
    return it->second;
}

LinkId Topology::link_id(std::string_view name) const {
    if (auto l = find_link(name)) return *l;
    throw TopologyError("unknown link '" + std::string(name) + "'");
}

std::string Topology::direction_label(LinkId l, Direction d) const {
    const auto& spec = link(l);
    return node(spec.source(d)).id + "->" + node(spec.target(d)).id;
}

std::vector<NodeId> Topology::nodes_of_kind(NodeKind k) const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].kind == k) out.push_back(static_cast<NodeId>(i));
    return out;
}

std::optional<int> Topology::lan_of(NodeId n) const {
    for (std::size_t i = 0; i < lans_.size(); ++i) {
        if (lans_[i].switch_node == n) return static_cast<int>(i);
        if (std::find(lans_[i].members.begin(), lans_[i].members.end(), n) != lans_[i].members.end())
            return static_cast<int>(i);
    }
    return std::nullopt;
}

std::optional<int> Topology::island_of(NodeId n) const {
    const auto lan = lan_of(n);
    for (std::size_t i = 0; i < islands_.size(); ++i) {
        if (islands_[i].router == n) return static_cast<int>(i);
        if (lan && std::find(islands_[i].lans.begin(), islands_[i].lans.end(), *lan) != islands_[i].lans.end())
            return static_cast<int>(i);
    }
    return std::nullopt;
}

std::vector<NodeId> Topology::island_members(int island) const {
    std::vector<NodeId> out;
    for (int lan : islands_.at(static_cast<std::size_t>(island)).lans)
        out.insert(out.end(), lans_[lan].members.begin(), lans_[lan].members.end());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Builtin testbed

Topology build_paper_topology() {
    constexpr std::int64_t kCoreBps = 10'000'000;
    constexpr std::int64_t kAccessBps = 2'000'000;
    constexpr std::int64_t kLanBps = 10'000'000;
    const SimTime core_delay = from_millis(20);
    const SimTime access_delay = from_millis(10);

    Topology t;
    for (int i = 0; i < 4; ++i) t.add_node("coreRouter" + std::to_string(i), NodeKind::CoreRouter);
    for (int i = 0; i < 3; ++i) t.add_node("router" + std::to_string(i), NodeKind::AccessRouter);
    for (int i = 0; i < 9; ++i) t.add_node("lan" + std::to_string(i), NodeKind::LanSwitch);
    for (int i = 0; i < 36; ++i) t.add_node("node" + std::to_string(i), NodeKind::Client);
    t.add_node("seeder", NodeKind::Seeder);

    const std::pair<int, int> core_pairs[] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};
    for (int i = 0; i < 6; ++i) {
        const auto [x, y] = core_pairs[i];
        t.add_link("coreRouter" + std::to_string(x), "coreRouter" + std::to_string(y), kCoreBps, core_delay,
                   kDefaultQueueCapacity, LinkKind::Core, "coreLink" + std::to_string(i));
    }
    for (int i = 0; i < 3; ++i)
        t.add_link("coreRouter" + std::to_string(i), "router" + std::to_string(i), kAccessBps, access_delay,
                   kDefaultQueueCapacity, LinkKind::Access, "link" + std::to_string(i));
    t.add_link("coreRouter3", "seeder", kAccessBps, access_delay, kDefaultQueueCapacity, LinkKind::Access, "link3");

    for (int lan = 0; lan < 9; ++lan) {
        const std::string sw = "lan" + std::to_string(lan);
        t.add_link("router" + std::to_string(lan / 3), sw, kLanBps, 0, kDefaultQueueCapacity, LinkKind::Lan);
        std::vector<std::string> members;
        for (int k = 0; k < 4; ++k) {
            const std::string client = "node" + std::to_string(lan * 4 + k);
            t.add_link(sw, client, kLanBps, 0, kDefaultQueueCapacity, LinkKind::Lan);
            members.push_back(client);
        }
        t.add_lan(sw, members);
    }
    for (int i = 0; i < 3; ++i) {
        std::vector<std::string> lans;
        for (int k = 0; k < 3; ++k) lans.push_back("lan" + std::to_string(i * 3 + k));
        t.add_island("router" + std::to_string(i), lans);
    }
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (!piece.empty()) out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

struct Attributes {
    std::unordered_map<std::string, std::string> values;

    std::optional<std::string_view> get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) return std::nullopt;
        return std::string_view(it->second);
    }
};

Attributes parse_attributes(const std::vector<std::string_view>& tokens, std::size_t first, int line) {
    Attributes attrs;
    for (std::size_t i = first; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw TopologyError("expected key=value, got '" + std::string(tokens[i]) + "'", line);
        std::string key(tokens[i].substr(0, eq));
        if (!attrs.values.emplace(key, std::string(tokens[i].substr(eq + 1))).second)
            throw TopologyError("repeated attribute '" + key + "'", line);
    }
    return attrs;
}

std::int64_t parse_bandwidth(std::string_view s, int line) {
    std::int64_t scale = 0;
    std::string_view digits;
    if (s.size() > 4 && s.substr(s.size() - 4) == "mbps") {
        scale = 1'000'000;
        digits = s.substr(0, s.size() - 4);
    } else if (s.size() > 4 && s.substr(s.size() - 4) == "kbps") {
        scale = 1'000;
        digits = s.substr(0, s.size() - 4);
    } else {
        throw TopologyError("bandwidth '" + std::string(s) + "' must end in kbps or mbps", line);
    }
    auto v = parse_int(digits);
    if (!v) throw TopologyError("bad bandwidth '" + std::string(s) + "'", line);
    return *v * scale;
}

SimTime parse_delay(std::string_view s, int line) {
    if (s.size() < 3 || s.substr(s.size() - 2) != "ms") throw TopologyError("delay '" + std::string(s) + "' must end in ms", line);
    auto v = parse_int(s.substr(0, s.size() - 2));
    if (!v) throw TopologyError("bad delay '" + std::string(s) + "'", line);
    return from_millis(*v);
}

std::string format_bandwidth(std::int64_t bps) {
    if (bps % 1'000'000 == 0) return std::to_string(bps / 1'000'000) + "mbps";
    if (bps % 1'000 == 0) return std::to_string(bps / 1'000) + "kbps";
    throw TopologyError("bandwidth " + std::to_string(bps) + " bps is not expressible in kbps");
}

std::string format_delay(SimTime d) {
    if (d % 1'000'000 != 0) throw TopologyError("delay " + std::to_string(d) + " ns is not a whole number of ms");
    return std::to_string(d / 1'000'000) + "ms";
}

template <typename... Keys>
void require_only(const Attributes& a, int line, Keys... allowed) {
    for (const auto& [k, v] : a.values)
        if (((k != allowed) && ...)) throw TopologyError("unknown attribute '" + k + "'", line);
}

}  // namespace

Topology parse_topology(std::string_view text) {
    Topology t;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;

        try {
            const auto directive = tokens[0];
            if (directive == "node") {
                if (tokens.size() < 2) throw TopologyError("node: missing id", line_no);
                const auto attrs = parse_attributes(tokens, 2, line_no);
                require_only(attrs, line_no, "kind");
                const auto kind_text = attrs.get("kind");
                if (!kind_text) throw TopologyError("node: missing kind=", line_no);
                const auto kind = parse_node_kind(*kind_text);
                if (!kind) throw TopologyError("node: unknown kind '" + std::string(*kind_text) + "'", line_no);
                t.add_node(std::string(tokens[1]), *kind);
            } else if (directive == "link") {
                if (tokens.size() < 3) throw TopologyError("link: expected two endpoint ids", line_no);
                const auto attrs = parse_attributes(tokens, 3, line_no);
                require_only(attrs, line_no, "bw", "delay", "queue", "name", "kind");
                const auto bw = attrs.get("bw");
                const auto delay = attrs.get("delay");
                if (!bw || !delay) throw TopologyError("link: bw= and delay= are required", line_no);
                int queue = kDefaultQueueCapacity;
                if (auto q = attrs.get("queue")) {
                    auto v = parse_int(*q);
                    if (!v) throw TopologyError("bad queue '" + std::string(*q) + "'", line_no);
                    queue = static_cast<int>(*v);
                }
                std::optional<LinkKind> kind;
                if (auto k = attrs.get("kind")) {
                    kind = parse_link_kind(*k);
                    if (!kind) throw TopologyError("link: unknown kind '" + std::string(*k) + "'", line_no);
                }
                t.add_link(tokens[1], tokens[2], parse_bandwidth(*bw, line_no), parse_delay(*delay, line_no), queue, kind,
                           std::string(attrs.get("name").value_or("")));
            } else if (directive == "lan") {
                if (tokens.size() < 2) throw TopologyError("lan: missing id", line_no);
                const auto attrs = parse_attributes(tokens, 2, line_no);
                require_only(attrs, line_no, "members");
                t.add_lan(tokens[1], split_list(attrs.get("members").value_or("")));
            } else if (directive == "island") {
                if (tokens.size() < 2) throw TopologyError("island: missing router id", line_no);
                const auto attrs = parse_attributes(tokens, 2, line_no);
                require_only(attrs, line_no, "lans");
                t.add_island(tokens[1], split_list(attrs.get("lans").value_or("")));
            } else {
                throw TopologyError("unknown directive '" + std::string(directive) + "'", line_no);
            }
        } catch (const TopologyError& e) {
            if (e.line() > 0) throw;
            throw TopologyError(e.what(), line_no);
        }
    }
    t.validate();
    return t;
}

std::string serialize_topology(const Topology& t) {
    std::ostringstream out;
    for (const auto& n : t.nodes()) out << "node " << n.id << " kind=" << to_string(n.kind) << '\n';
    for (const auto& l : t.links())
        out << "link " << t.node(l.a).id << ' ' << t.node(l.b).id << " bw=" << format_bandwidth(l.bandwidth_bps)
            << " delay=" << format_delay(l.propagation_delay) << " queue=" << l.queue_capacity << " name=" << l.name
            << " kind=" << to_string(l.kind) << '\n';
    for (const auto& lan : t.lans()) {
        out << "lan " << t.node(lan.switch_node).id << " members=";
        for (std::size_t i = 0; i < lan.members.size(); ++i) out << (i ? "," : "") << t.node(lan.members[i]).id;
        out << '\n';
    }
    for (const auto& island : t.islands()) {
        out << "island " << t.node(island.router).id << " lans=";
        for (std::size_t i = 0; i < island.lans.size(); ++i)
            out << (i ? "," : "") << t.node(t.lans()[island.lans[i]].switch_node).id;
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Routing

RoutingTable::RoutingTable(const Topology& t) : n_(t.node_count()), routes_(n_ * n_) {
    constexpr int kUnreached = std::numeric_limits<int>::max();
    // dist[d][x]: hop count from x to d
    std::vector<std::vector<int>> dist(n_, std::vector<int>(n_, kUnreached));
    for (std::size_t d = 0; d < n_; ++d) {
        auto& row = dist[d];
        row[d] = 0;
        std::deque<NodeId> frontier{static_cast<NodeId>(d)};
        while (!frontier.empty()) {
            const NodeId x = frontier.front();
            frontier.pop_front();
            for (const auto& adj : t.adjacent(x))
                if (row[adj.neighbor] == kUnreached) {
                    row[adj.neighbor] = row[x] + 1;
                    frontier.push_back(adj.neighbor);
                }
        }
    }

    for (std::size_t s = 0; s < n_; ++s) {
        for (std::size_t d = s + 1; d < n_; ++d) {
            if (dist[d][s] == kUnreached) throw SimulationError("internal: no route " + t.node(s).id + " -> " + t.node(d).id);
            std::vector<Hop> path;
            NodeId x = static_cast<NodeId>(s);
            while (x != static_cast<NodeId>(d)) {
                const Adjacency* best = nullptr;
                for (const auto& adj : t.adjacent(x)) {
                    if (dist[d][adj.neighbor] != dist[d][x] - 1) continue;
                    if (!best || t.node(adj.neighbor).id < t.node(best->neighbor).id ||
                        (adj.neighbor == best->neighbor && adj.link < best->link))
                        best = &adj;
                }
                path.push_back({best->link, best->dir});
                x = best->neighbor;
            }
            std::vector<Hop> back;
            back.reserve(path.size());
            for (auto it = path.rbegin(); it != path.rend(); ++it) back.push_back({it->link, reverse(it->dir)});
            routes_[s * n_ + d] = std::move(path);
            routes_[d * n_ + s] = std::move(back);
        }
    }
}

RoutingTable compute_routes(const Topology& t) { return RoutingTable(t); }

std::int64_t bottleneck_bps(const Topology& t, const std::vector<Hop>& route) {
    std::int64_t best = 0;
    for (const auto& h : route) {
        const auto bw = t.link(h.link).bandwidth_bps;
        if (best == 0 || bw < best) best = bw;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Multicast scope

bool multicast_edge_allowed(const Topology& t, NodeId from, NodeId to, int ttl_after_decrement) {
    const NodeKind fk = t.node(from).kind;
    const NodeKind tk = t.node(to).kind;
    if (fk != NodeKind::LanSwitch && fk != NodeKind::AccessRouter) return false;
    switch (tk) {
        case NodeKind::CoreRouter: return false;
        case NodeKind::Client:
        case NodeKind::Seeder: return ttl_after_decrement >= 0;
        case NodeKind::LanSwitch: return ttl_after_decrement >= 1;
        case NodeKind::AccessRouter: return fk == NodeKind::LanSwitch && ttl_after_decrement >= 1;
    }
    return false;
}

std::vector<NodeId> multicast_scope(const Topology& t, const RoutingTable& routes, NodeId origin, int ttl) {
    std::vector<NodeId> out;
    if (ttl <= 0) return out;
    out.push_back(origin);
    for (std::size_t y = 0; y < t.node_count(); ++y) {
        const auto target = static_cast<NodeId>(y);
        if (target == origin || !is_end_host(t.node(target).kind)) continue;
        const auto& path = routes.route(origin, target);
        bool ok = !path.empty() && t.node(t.link(path.front().link).target(path.front().dir)).kind != NodeKind::CoreRouter;
        int remaining = ttl;
        for (std::size_t i = 1; ok && i < path.size(); ++i) {
            const auto& link = t.link(path[i].link);
            --remaining;
            ok = multicast_edge_allowed(t, link.source(path[i].dir), link.target(path[i].dir), remaining);
        }
        if (ok) out.push_back(target);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> multicast_scope(const Topology& t, NodeId origin, int ttl) {
    return multicast_scope(t, RoutingTable(t), origin, ttl);
}

}  // namespace hcdn
