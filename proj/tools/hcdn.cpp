// hcdn: console front-end for the content distribution simulator.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "hcdn/expcli.hpp"

using namespace hcdn;

namespace {

struct Flags {
    std::string model = "hybrid";
    std::string models = "www,p2p,hybrid";
    std::string topology;
    std::size_t file_size = 1 << 20;
    std::size_t piece_size = kDefaultPieceSize;
    int runs = 5;
    std::uint64_t seed = 1;
    std::string loss = "0";
    std::string cbr = "0";
    std::string out = "out";
    double handshake_timeout_s = 2.0;
    double retry_backoff_s = 5.0;
    int port_pool = 4;
    int batch_size = 4;
    int upload_slots = 4;
    int attempt_limit = 32;
    std::size_t peer_list = 20;
    int ttl = 3;
    double join_window_s = 1.0;
    double time_limit_s = 3600.0;
};

void add_run_flags(CLI::App* cmd, Flags& f, bool with_model) {
    if (with_model) cmd->add_option("--model", f.model, "www, p2p or hybrid")->capture_default_str();
    cmd->add_option("--topology", f.topology, "topology file (default: builtin topology)");
    cmd->add_option("--file-size", f.file_size, "file size in bytes")->capture_default_str();
    cmd->add_option("--piece-size", f.piece_size, "piece size in bytes")->capture_default_str();
    cmd->add_option("--runs", f.runs, "seeded repetitions")->capture_default_str();
    cmd->add_option("--seed", f.seed, "base seed; run i uses seed+i")->capture_default_str();
    cmd->add_option("--loss", f.loss, "LAN spoke loss in percent: value, list a,b,c or range a:b:step")
        ->capture_default_str();
    cmd->add_option("--cbr", f.cbr, "cross traffic in percent of path bottleneck")->capture_default_str();
    cmd->add_option("--out", f.out, "output directory")->capture_default_str();
    cmd->add_option("--handshake-timeout", f.handshake_timeout_s, "seconds")->capture_default_str();
    cmd->add_option("--retry-backoff", f.retry_backoff_s, "seconds")->capture_default_str();
    cmd->add_option("--port-pool", f.port_pool, "upload slots per peer")->capture_default_str();
    cmd->add_option("--batch-size", f.batch_size, "outstanding chunk requests per peer")->capture_default_str();
    cmd->add_option("--unchoke", f.upload_slots, "reciprocation slots")->capture_default_str();
    cmd->add_option("--attempt-limit", f.attempt_limit, "request passes per chunk before giving up")
        ->capture_default_str();
    cmd->add_option("--peer-list", f.peer_list, "tracker peer list size")->capture_default_str();
    cmd->add_option("--ttl", f.ttl, "island multicast TTL")->capture_default_str();
    cmd->add_option("--join-window", f.join_window_s, "clients start uniformly within this many seconds")
        ->capture_default_str();
    cmd->add_option("--time-limit", f.time_limit_s, "simulated seconds before a run is cut off")->capture_default_str();
}

std::vector<double> percent_list(const std::string& text) {
    auto v = parse_value_list(text);
    for (double& x : v) x /= 100.0;
    return v;
}

ExperimentConfig make_config(const Flags& f) {
    ExperimentConfig c;
    c.model = parse_model(f.model);
    if (!f.topology.empty()) c.topology_file = f.topology;
    c.file_size = f.file_size;
    c.piece_size = f.piece_size;
    c.runs = f.runs;
    c.base_seed = f.seed;
    c.loss = percent_list(f.loss);
    c.cbr = percent_list(f.cbr);
    c.out = f.out;
    c.swarm.handshake_timeout = from_seconds(f.handshake_timeout_s);
    c.swarm.retry_backoff = from_seconds(f.retry_backoff_s);
    c.swarm.port_pool_capacity = f.port_pool;
    c.swarm.batch_size = f.batch_size;
    c.swarm.upload_slots = f.upload_slots;
    c.swarm.global_attempt_limit = f.attempt_limit;
    c.swarm.peer_list_size = f.peer_list;
    c.swarm.multicast_ttl = f.ttl;
    c.join_window = from_seconds(f.join_window_s);
    c.time_limit = from_seconds(f.time_limit_s);
    c.validate();
    return c;
}

std::string opt(const std::optional<double>& v, int places = 3) { return v ? format_fixed(*v, places) : "-"; }

void print_report(const std::string& label, const AggregateReport& r) {
    std::cout << label << ": " << r.ok_runs << "/" << r.runs.size() << " runs ok, mean completion "
              << format_fixed(r.mean_completion_s, 3) << " s (run means " << format_fixed(r.min_completion_s, 3) << ".."
              << format_fixed(r.max_completion_s, 3) << "), core stress " << opt(r.mean_core_stress)
              << ", core content bytes " << format_fixed(r.mean_core_bytes, 0) << "\n";
}

int cmd_simulate(const Flags& f) {
    ExperimentConfig c = make_config(f);
    if (c.loss.size() > 1 || c.cbr.size() > 1) throw ConfigError("simulate takes single loss/cbr values; use sweep");
    const auto r = run_experiment(c);
    print_report(std::string(to_string(c.model)), r);
    std::cout << "wrote " << (c.out / "summary.csv").string() << "\n";
    return r.all_ok() ? 0 : 2;
}

int cmd_sweep(const Flags& f) {
    ExperimentConfig c = make_config(f);
    SweepAxis axis = SweepAxis::Loss;
    const auto points = sweep(c, &axis);
    bool ok = true;
    for (const auto& p : points) {
        print_report(std::string(axis == SweepAxis::Loss ? "loss " : "cbr ") + format_fixed(p.axis_value * 100, 2) + "%", p);
        ok = ok && p.all_ok();
    }
    std::cout << "wrote " << (c.out / "sweep.csv").string() << "\n";
    return ok ? 0 : 2;
}

int cmd_compare(const Flags& f) {
    ExperimentConfig c = make_config(f);
    if (c.loss.size() > 1 || c.cbr.size() > 1) throw ConfigError("compare takes single loss/cbr values");
    std::vector<ModelKind> models;
    std::stringstream ss(f.models);
    for (std::string m; std::getline(ss, m, ',');) models.push_back(parse_model(m));
    const auto rows = compare_models(c, models);
    bool ok = true;
    for (const auto& r : rows) {
        print_report(std::string(to_string(r.model)), r.report);
        ok = ok && r.report.all_ok();
    }
    std::cout << "wrote " << (c.out / "compare.csv").string() << "\n";
    return ok ? 0 : 2;
}

int cmd_pieces(const std::string& path, std::size_t piece_size) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto [spec, pieces] = make_pieces(data, piece_size, path);
    std::cout << "index,offset,length,sha1\n";
    for (const auto& p : pieces)
        std::cout << p.index << ',' << p.index * piece_size << ',' << p.bytes->size() << ',' << to_hex(p.digest) << '\n';
    return 0;
}

int cmd_demo(std::uint64_t seed) {
    const Topology topo = build_demo_topology();
    const RoutingTable routes(topo);
    const NodeId server = seeder_node(topo);
    std::cout << "9 clients in 3 islands fetch a 1 MB file from one server\n";
    std::cout << "model    mean_s   downlink stress per link\n";
    for (ModelKind m : {ModelKind::Www, ModelKind::P2P, ModelKind::Hybrid}) {
        ScenarioConfig cfg;
        cfg.model = m;
        cfg.seed = seed;
        const auto r = run_scenario(topo, routes, cfg);
        const std::string mean = format_fixed(mean_completion_s(r.records), 2);
        std::cout << std::string(to_string(m)) << std::string(9 - to_string(m).size(), ' ') << mean
                  << std::string(mean.size() < 7 ? 7 - mean.size() : 0, ' ');
        for (auto [l, d] : downlink_directions(topo, routes, server, LinkKind::Access))
            std::cout << ' ' << topo.link(l).name << '=' << opt(stress(*r.ledger, l, d), 2);
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid content distribution simulator: WWW, P2P swarm and island-multicast hybrid"};
    app.require_subcommand(1);
    Flags f;

    auto* simulate = app.add_subcommand("simulate", "run one model for N seeded repetitions");
    add_run_flags(simulate, f, true);
    auto* compare = app.add_subcommand("compare", "run several models on identical seeds");
    add_run_flags(compare, f, false);
    compare->add_option("--models", f.models, "comma separated models")->capture_default_str();
    auto* sweep_cmd = app.add_subcommand("sweep", "sweep loss or cbr over a list of values");
    add_run_flags(sweep_cmd, f, true);

    auto* topology = app.add_subcommand("topology", "topology utilities");
    topology->require_subcommand(1);
    auto* print_builtin = topology->add_subcommand("print-builtin", "print the builtin topology in config format");

    std::string pieces_path;
    std::size_t pieces_size = kDefaultPieceSize;
    auto* pieces = app.add_subcommand("pieces", "split a file into pieces and print their digests");
    pieces->add_option("FILE", pieces_path)->required();
    pieces->add_option("--piece-size", pieces_size)->capture_default_str();

    std::uint64_t demo_seed = 1;
    auto* demo = app.add_subcommand("demo", "redundancy scenario with three small islands");
    demo->add_option("--seed", demo_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(f);
        if (*compare) return cmd_compare(f);
        if (*sweep_cmd) return cmd_sweep(f);
        if (*print_builtin) {
            std::cout << serialize_topology(build_paper_topology());
            return 0;
        }
        if (*pieces) return cmd_pieces(pieces_path, pieces_size);
        if (*demo) return cmd_demo(demo_seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ChunkError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
