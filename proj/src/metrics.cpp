#include "hcdn/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hcdn {

LinkLedger::LinkLedger(const Topology& t, bool keep_fingerprint_log)
    : dirs_(t.links().size() * 2), keep_log_(keep_fingerprint_log) {}

void LinkLedger::record_packet(LinkId link, Direction dir, const Packet& p) {
    auto& d = dirs_[static_cast<std::size_t>(link) * 2 + index_of(dir)];
    d.bytes_total += p.size();
    d.packets_all += 1;
    if (!p.carries_content() || !p.fingerprint) return;
    d.stress_packets += 1;
    d.content_bytes += p.payload_bytes;
    d.fingerprints.insert(*p.fingerprint);
    if (keep_log_) d.fingerprint_log.push_back(*p.fingerprint);
}

void LinkLedger::record_drop(LinkId link, Direction dir) { dirs_[static_cast<std::size_t>(link) * 2 + index_of(dir)].drops += 1; }

std::optional<double> stress(const DirectionLedger& d) {
    if (d.fingerprints.empty()) return std::nullopt;
    return static_cast<double>(d.stress_packets) / static_cast<double>(d.fingerprints.size());
}

std::vector<CdfPoint> completion_cdf(const std::vector<DownloadRecord>& records) {
    std::vector<double> durations;
    for (const auto& r : records)
        if (r.completed()) durations.push_back(r.duration_s());
    std::sort(durations.begin(), durations.end());
    std::vector<CdfPoint> out;
    out.reserve(durations.size());
    const double total = static_cast<double>(records.size());
    for (std::size_t i = 0; i < durations.size(); ++i)
        out.push_back({durations[i], static_cast<double>(i + 1) / total});
    return out;
}

double mean_completion_s(const std::vector<DownloadRecord>& records) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : records)
        if (r.completed()) {
            sum += r.duration_s();
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<std::pair<LinkId, Direction>> downlink_directions(const Topology& t, const RoutingTable& routes, NodeId origin,
                                                              LinkKind kind) {
    std::vector<std::pair<LinkId, Direction>> out;
    for (std::size_t i = 0; i < t.links().size(); ++i) {
        const auto& l = t.links()[i];
        if (l.kind != kind) continue;
        const int da = routes.hops(origin, l.a);
        const int db = routes.hops(origin, l.b);
        if (da < db) out.emplace_back(static_cast<LinkId>(i), Direction::AtoB);
        if (db < da) out.emplace_back(static_cast<LinkId>(i), Direction::BtoA);
    }
    return out;
}

std::uint64_t content_bytes(const Topology& t, const LinkLedger& ledger, LinkKind kind) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < t.links().size(); ++i) {
        if (t.links()[i].kind != kind) continue;
        sum += ledger.at(static_cast<LinkId>(i), Direction::AtoB).content_bytes;
        sum += ledger.at(static_cast<LinkId>(i), Direction::BtoA).content_bytes;
    }
    return sum;
}

std::optional<double> mean_stress(const LinkLedger& ledger, const std::vector<std::pair<LinkId, Direction>>& dirs) {
    double sum = 0;
    int n = 0;
    for (auto [link, dir] : dirs)
        if (auto s = stress(ledger, link, dir)) {
            sum += *s;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::string format_fixed(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void close_csv(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void export_csv(const Topology& t, const LinkLedger& ledger, const std::vector<DownloadRecord>& records,
                const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    {
        const auto path = dir / "links.csv";
        auto out = open_csv(path);
        out << "link,direction,bytes,packets_total,packets_unique,stress,drops,content_bytes\n";
        for (std::size_t i = 0; i < t.links().size(); ++i) {
            for (Direction d : {Direction::AtoB, Direction::BtoA}) {
                const auto& e = ledger.at(static_cast<LinkId>(i), d);
                const auto s = stress(e);
                out << t.links()[i].name << ',' << t.direction_label(static_cast<LinkId>(i), d) << ',' << e.bytes_total << ','
                    << e.stress_packets << ',' << e.unique_payloads() << ',' << (s ? format_fixed(*s) : "") << ','
                    << e.drops << ',' << e.content_bytes << '\n';
            }
        }
        close_csv(out, path);
    }
    {
        const auto path = dir / "completions.csv";
        auto out = open_csv(path);
        out << "client,start_s,finish_s,bytes,retx\n";
        for (const auto& r : records)
            out << r.client << ',' << format_fixed(to_seconds(r.start)) << ','
                << (r.finish ? format_fixed(to_seconds(*r.finish)) : "") << ',' << r.bytes_received << ','
                << r.retransmissions << '\n';
        close_csv(out, path);
    }
    {
        const auto path = dir / "cdf.csv";
        auto out = open_csv(path);
        out << "time_s,fraction\n";
        for (const auto& p : completion_cdf(records)) out << format_fixed(p.time_s) << ',' << format_fixed(p.fraction) << '\n';
        close_csv(out, path);
    }
}

}  // namespace hcdn
