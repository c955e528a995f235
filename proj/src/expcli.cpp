#include "hcdn/expcli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hcdn {

namespace {

void check_axis(const std::vector<double>& v, const char* name, double upper) {
    if (v.empty()) throw ConfigError(std::string(name) + " list must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0 && v[i] <= upper))
            throw ConfigError(std::string(name) + " value " + format_fixed(v[i] * 100, 2) + "% out of range");
        if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(std::string(name) + " list must be strictly ascending");
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_fixed(*v) : ""; }

std::string point_name(SweepAxis axis, double value) {
    return std::string(axis == SweepAxis::Loss ? "loss-" : "cbr-") + format_fixed(value * 100, 2);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (file_size == 0) throw ConfigError("file size must be positive");
    if (piece_size == 0) throw ConfigError("piece size must be positive");
    check_axis(loss, "loss", 1.0);
    check_axis(cbr, "cbr", 0.99);
    if (swarm.port_pool_capacity < 1) throw ConfigError("port pool must be >= 1");
    if (swarm.batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (swarm.upload_slots < 1) throw ConfigError("upload slots must be >= 1");
    if (swarm.global_attempt_limit < 1) throw ConfigError("attempt limit must be >= 1");
    if (swarm.handshake_timeout <= 0) throw ConfigError("handshake timeout must be positive");
    if (swarm.retry_backoff < 0) throw ConfigError("retry backoff must be non-negative");
    if (swarm.multicast_ttl < 1) throw ConfigError("multicast ttl must be >= 1");
    if (join_window < 0) throw ConfigError("join window must be non-negative");
    if (time_limit <= 0) throw ConfigError("time limit must be positive");
    if (topology_file && !std::filesystem::exists(*topology_file))
        throw ConfigError("topology file not found: " + topology_file->string());
}

ScenarioConfig ExperimentConfig::scenario(std::uint64_t seed, double l, double c) const {
    ScenarioConfig s;
    s.model = model;
    s.file_size = file_size;
    s.piece_size = piece_size;
    s.seed = seed;
    s.loss = l;
    s.cbr = c;
    s.join_window = join_window;
    s.time_limit = time_limit;
    s.swarm = swarm;
    s.www_flow = www_flow;
    return s;
}

Topology load_topology(const ExperimentConfig& cfg) {
    if (!cfg.topology_file) return build_paper_topology();
    std::ifstream in(*cfg.topology_file, std::ios::binary);
    if (!in) throw ConfigError("cannot read topology file " + cfg.topology_file->string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_topology(text.str());
}

RunSummary summarize_run(const Topology& topo, const RoutingTable& routes, const RunResult& r) {
    RunSummary s;
    s.ok = true;
    s.clients = r.records.size();
    double lo = 0, hi = 0;
    bool first = true;
    for (const auto& d : r.records) {
        if (!d.completed()) continue;
        ++s.completed;
        lo = first ? d.duration_s() : std::min(lo, d.duration_s());
        hi = first ? d.duration_s() : std::max(hi, d.duration_s());
        first = false;
    }
    s.mean_completion_s = mean_completion_s(r.records);
    s.min_completion_s = lo;
    s.max_completion_s = hi;
    const NodeId seeder = seeder_node(topo);
    s.mean_core_stress = mean_stress(*r.ledger, downlink_directions(topo, routes, seeder, LinkKind::Core));
    s.core_bytes = content_bytes(topo, *r.ledger, LinkKind::Core);
    s.access_bytes = content_bytes(topo, *r.ledger, LinkKind::Access);
    return s;
}

namespace {

std::vector<LinkAggregate> link_rows(const Topology& topo, const LinkLedger& ledger) {
    std::vector<LinkAggregate> out;
    for (std::size_t i = 0; i < topo.links().size(); ++i)
        for (Direction d : {Direction::AtoB, Direction::BtoA}) {
            const auto l = static_cast<LinkId>(i);
            out.push_back({topo.links()[i].name, topo.direction_label(l, d),
                           static_cast<double>(ledger.at(l, d).bytes_total), stress(ledger, l, d)});
        }
    return out;
}

}  // namespace

AggregateReport aggregate(std::vector<RunSummary> runs, const std::vector<std::vector<LinkAggregate>>& per_run_links) {
    AggregateReport a;
    double stress_sum = 0;
    int stress_n = 0;
    bool first = true;
    for (const auto& r : runs) {
        if (!r.ok) continue;
        ++a.ok_runs;
        a.mean_completion_s += r.mean_completion_s;
        a.mean_core_bytes += static_cast<double>(r.core_bytes);
        a.min_completion_s = first ? r.mean_completion_s : std::min(a.min_completion_s, r.mean_completion_s);
        a.max_completion_s = first ? r.mean_completion_s : std::max(a.max_completion_s, r.mean_completion_s);
        first = false;
        if (r.mean_core_stress) {
            stress_sum += *r.mean_core_stress;
            ++stress_n;
        }
    }
    if (a.ok_runs) {
        a.mean_completion_s /= static_cast<double>(a.ok_runs);
        a.mean_core_bytes /= static_cast<double>(a.ok_runs);
    }
    if (stress_n) a.mean_core_stress = stress_sum / stress_n;

    if (!per_run_links.empty()) {
        a.links = per_run_links.front();
        std::vector<double> ssum(a.links.size(), 0);
        std::vector<int> sn(a.links.size(), 0);
        for (auto& l : a.links) l.mean_bytes = 0;
        for (const auto& run : per_run_links)
            for (std::size_t i = 0; i < run.size() && i < a.links.size(); ++i) {
                a.links[i].mean_bytes += run[i].mean_bytes;
                if (run[i].mean_stress) {
                    ssum[i] += *run[i].mean_stress;
                    ++sn[i];
                }
            }
        for (std::size_t i = 0; i < a.links.size(); ++i) {
            a.links[i].mean_bytes /= static_cast<double>(per_run_links.size());
            a.links[i].mean_stress = sn[i] ? std::optional<double>(ssum[i] / sn[i]) : std::nullopt;
        }
    }
    a.runs = std::move(runs);
    return a;
}

AggregateReport run_point(const ExperimentConfig& cfg, const Topology& topo, double loss, double cbr,
                          const std::filesystem::path& out) {
    const RoutingTable routes(topo);
    std::vector<RunSummary> runs;
    std::vector<std::vector<LinkAggregate>> links;
    for (int i = 0; i < cfg.runs; ++i) {
        const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(i);
        RunSummary s;
        try {
            const RunResult r = run_scenario(topo, routes, cfg.scenario(seed, loss, cbr));
            if (!r.integrity_ok) throw SimulationError("assembled file differs from the seeder's copy");
            export_csv(topo, *r.ledger, r.records, out / ("run-" + std::to_string(i)));
            s = summarize_run(topo, routes, r);
            links.push_back(link_rows(topo, *r.ledger));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            s.ok = false;
            s.error = e.what();
            std::cerr << "warning: run " << i << " (seed " << seed << ") failed: " << e.what() << "\n";
        }
        s.index = i;
        s.seed = seed;
        runs.push_back(std::move(s));
    }
    AggregateReport report = aggregate(std::move(runs), links);

    {
        const auto path = out / "summary.csv";
        auto f = open_out(path);
        f << "run,seed,status,clients,completed,mean_completion_s,min_completion_s,max_completion_s,mean_core_stress,"
             "core_content_bytes,access_content_bytes\n";
        for (const auto& r : report.runs) {
            f << r.index << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << r.clients << ',' << r.completed
              << ',' << format_fixed(r.mean_completion_s) << ',' << format_fixed(r.min_completion_s) << ','
              << format_fixed(r.max_completion_s) << ',' << opt(r.mean_core_stress) << ',' << r.core_bytes << ','
              << r.access_bytes << '\n';
        }
        f << "mean,," << report.ok_runs << "/" << report.runs.size() << ",,," << format_fixed(report.mean_completion_s)
          << ',' << format_fixed(report.min_completion_s) << ',' << format_fixed(report.max_completion_s) << ','
          << opt(report.mean_core_stress) << ',' << format_fixed(report.mean_core_bytes) << ",\n";
        if (!f.flush()) throw std::runtime_error("write failed for " + path.string());
    }
    {
        const auto path = out / "links_mean.csv";
        auto f = open_out(path);
        f << "link,direction,mean_bytes,mean_stress\n";
        for (const auto& l : report.links)
            f << l.link << ',' << l.direction << ',' << format_fixed(l.mean_bytes) << ',' << opt(l.mean_stress) << '\n';
        if (!f.flush()) throw std::runtime_error("write failed for " + path.string());
    }
    return report;
}

AggregateReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Topology topo = load_topology(cfg);
    return run_point(cfg, topo, cfg.loss.front(), cfg.cbr.front(), cfg.out);
}

std::vector<AggregateReport> sweep(const ExperimentConfig& cfg, SweepAxis* axis_out) {
    cfg.validate();
    if (cfg.loss.size() > 1 && cfg.cbr.size() > 1) throw ConfigError("sweep accepts one swept axis at a time (loss or cbr)");
    const SweepAxis axis = cfg.cbr.size() > 1 ? SweepAxis::Cbr : SweepAxis::Loss;
    if (axis_out) *axis_out = axis;
    const Topology topo = load_topology(cfg);
    const auto& values = axis == SweepAxis::Loss ? cfg.loss : cfg.cbr;
    std::vector<AggregateReport> out;
    for (double v : values) {
        const double loss = axis == SweepAxis::Loss ? v : cfg.loss.front();
        const double cbr = axis == SweepAxis::Cbr ? v : cfg.cbr.front();
        AggregateReport r = run_point(cfg, topo, loss, cbr, cfg.out / point_name(axis, v));
        r.axis_value = v;
        out.push_back(std::move(r));
    }
    const auto path = cfg.out / "sweep.csv";
    auto f = open_out(path);
    f << "axis_value,mean_completion_s,mean_core_stress,mean_core_bytes\n";
    for (const auto& r : out)
        f << format_fixed(r.axis_value * 100) << ',' << format_fixed(r.mean_completion_s) << ',' << opt(r.mean_core_stress)
          << ',' << format_fixed(r.mean_core_bytes) << '\n';
    if (!f.flush()) throw std::runtime_error("write failed for " + path.string());
    return out;
}

std::optional<double> reduction_pct(double value, double baseline) {
    if (baseline == 0) return std::nullopt;
    return (baseline - value) / baseline * 100.0;
}

std::vector<ModelComparison> compare_models(const ExperimentConfig& cfg, const std::vector<ModelKind>& models) {
    cfg.validate();
    if (models.empty()) throw ConfigError("no models to compare");
    const Topology topo = load_topology(cfg);
    std::vector<ModelComparison> out;
    for (ModelKind m : models) {
        ExperimentConfig c = cfg;
        c.model = m;
        out.push_back({m, run_point(c, topo, cfg.loss.front(), cfg.cbr.front(), cfg.out / std::string(to_string(m)))});
    }
    auto find = [&](ModelKind k) -> const AggregateReport* {
        for (const auto& c : out)
            if (c.model == k) return &c.report;
        return nullptr;
    };
    const AggregateReport* www = find(ModelKind::Www);
    const AggregateReport* p2p = find(ModelKind::P2P);
    const auto path = cfg.out / "compare.csv";
    auto f = open_out(path);
    f << "model,mean_completion_s,core_content_bytes,mean_core_stress,completion_reduction_vs_www_pct,"
         "completion_reduction_vs_p2p_pct,core_bytes_reduction_vs_www_pct,core_bytes_reduction_vs_p2p_pct\n";
    for (const auto& c : out) {
        const auto& r = c.report;
        auto red = [](const AggregateReport* base, double v, double AggregateReport::*field) {
            return base ? reduction_pct(v, base->*field) : std::nullopt;
        };
        f << to_string(c.model) << ',' << format_fixed(r.mean_completion_s) << ',' << format_fixed(r.mean_core_bytes) << ','
          << opt(r.mean_core_stress) << ',' << opt(red(www, r.mean_completion_s, &AggregateReport::mean_completion_s))
          << ',' << opt(red(p2p, r.mean_completion_s, &AggregateReport::mean_completion_s)) << ','
          << opt(red(www, r.mean_core_bytes, &AggregateReport::mean_core_bytes)) << ','
          << opt(red(p2p, r.mean_core_bytes, &AggregateReport::mean_core_bytes)) << '\n';
    }
    if (!f.flush()) throw std::runtime_error("write failed for " + path.string());
    return out;
}

Topology build_demo_topology() {
    Topology t;
    t.add_node("core", NodeKind::CoreRouter);
    t.add_node("server", NodeKind::Seeder);
    t.add_link("core", "server", 2'000'000, from_millis(10), kDefaultQueueCapacity, LinkKind::Access, "serverLink");
    for (int i = 0; i < 3; ++i) {
        const std::string r = "router" + std::to_string(i);
        const std::string sw = "lan" + std::to_string(i);
        t.add_node(r, NodeKind::AccessRouter);
        t.add_node(sw, NodeKind::LanSwitch);
        t.add_link("core", r, 2'000'000, from_millis(10), kDefaultQueueCapacity, LinkKind::Access,
                   "access" + std::to_string(i));
        t.add_link(r, sw, 10'000'000, 0, kDefaultQueueCapacity, LinkKind::Lan);
        std::vector<std::string> members;
        for (int k = 0; k < 3; ++k) {
            const std::string c = "client" + std::to_string(i * 3 + k);
            t.add_node(c, NodeKind::Client);
            t.add_link(sw, c, 10'000'000, 0, kDefaultQueueCapacity, LinkKind::Lan);
            members.push_back(c);
        }
        t.add_lan(sw, members);
        t.add_island(r, {sw});
    }
    t.validate();
    return t;
}

std::vector<double> parse_value_list(const std::string& text) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + s + "' in '" + text + "'");
        return v;
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("range must be start:stop:step, got '" + text + "'");
        const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
        if (!(step > 0) || b < a) throw ConfigError("bad range '" + text + "'");
        const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
        return out;
    }
    if (!text.empty() && text.back() == ',') throw ConfigError("empty entry in list '" + text + "'");
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    if (out.empty()) throw ConfigError("empty value list");
    return out;
}

}  // namespace hcdn
