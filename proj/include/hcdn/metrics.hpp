#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hcdn/engine.hpp"
#include "hcdn/topology.hpp"

namespace hcdn {

/// Counters for one direction of one link. Every admitted packet adds to the
/// byte and packet totals; only content-bearing packets (data and
/// multicast-data with a payload) enter the stress accounting.
struct DirectionLedger {
    std::uint64_t bytes_total = 0;
    std::uint64_t packets_all = 0;
    std::uint64_t stress_packets = 0;
    std::uint64_t content_bytes = 0;  // payload bytes of content packets
    std::uint64_t drops = 0;
    std::unordered_set<std::uint64_t> fingerprints;
    std::vector<std::uint64_t> fingerprint_log;  // filled only when logging is on

    std::uint64_t unique_payloads() const { return fingerprints.size(); }
};

class LinkLedger : public LinkObserver {
public:
    explicit LinkLedger(const Topology& t, bool keep_fingerprint_log = false);

    void record_packet(LinkId link, Direction dir, const Packet& p);
    void record_drop(LinkId link, Direction dir);

    const DirectionLedger& at(LinkId link, Direction dir) const {
        return dirs_[static_cast<std::size_t>(link) * 2 + index_of(dir)];
    }
    std::size_t link_count() const { return dirs_.size() / 2; }
    bool logs_fingerprints() const { return keep_log_; }

    void on_admit(const Network&, LinkId link, Direction dir, const Packet& p) override { record_packet(link, dir, p); }
    void on_drop(const Network&, LinkId link, Direction dir, const Packet&, DropCause) override { record_drop(link, dir); }

private:
    std::vector<DirectionLedger> dirs_;
    bool keep_log_;
};

/// Total over distinct payloads; absent when no content crossed.
std::optional<double> stress(const DirectionLedger& d);
inline std::optional<double> stress(const LinkLedger& ledger, LinkId link, Direction dir) {
    return stress(ledger.at(link, dir));
}

struct DownloadRecord {
    std::string client;
    SimTime start = 0;
    std::optional<SimTime> finish;  // empty when the download failed
    std::uint64_t bytes_received = 0;
    std::uint64_t retransmissions = 0;

    bool completed() const { return finish.has_value(); }
    double duration_s() const { return completed() ? to_seconds(*finish - start) : 0.0; }
};

struct CdfPoint {
    double time_s;
    double fraction;
};

/// Step series over completed download durations; the denominator counts
/// every client, failed ones included.
std::vector<CdfPoint> completion_cdf(const std::vector<DownloadRecord>& records);

double mean_completion_s(const std::vector<DownloadRecord>& records);

/// Link directions of `kind` pointing away from `origin` (strictly farther
/// hop count at the target end).
std::vector<std::pair<LinkId, Direction>> downlink_directions(const Topology& t, const RoutingTable& routes, NodeId origin,
                                                              LinkKind kind);

/// Content bytes summed over both directions of every link of `kind`.
std::uint64_t content_bytes(const Topology& t, const LinkLedger& ledger, LinkKind kind);

/// Mean stress over the given directions, skipping those with no content.
std::optional<double> mean_stress(const LinkLedger& ledger, const std::vector<std::pair<LinkId, Direction>>& dirs);

std::string format_fixed(double v, int places = 6);

/// Writes links.csv, completions.csv and cdf.csv into `dir` (created if
/// needed). Throws std::runtime_error on I/O failure.
void export_csv(const Topology& t, const LinkLedger& ledger, const std::vector<DownloadRecord>& records,
                const std::filesystem::path& dir);

}  // namespace hcdn
