#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hcdn/metrics.hpp"
#include "support.hpp"

using namespace hcdn;

namespace {

Packet content(std::uint64_t fp, std::uint32_t payload = 1250, PacketKind kind = PacketKind::Data) {
    Packet p;
    p.kind = kind;
    p.payload_bytes = payload;
    p.fingerprint = fp;
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("record_packet inclusion rules") {
        const Topology t = hcdn::testing::pair(1'000'000, 0);
        LinkLedger ledger(t);
        ledger.record_packet(0, Direction::AtoB, content(7));
        const auto& d = ledger.at(0, Direction::AtoB);
        CHECK(d.bytes_total == 1300);
        CHECK(d.packets_all == 1);
        CHECK(d.stress_packets == 1);
        CHECK(d.unique_payloads() == 1);

        ledger.record_packet(0, Direction::AtoB, control_packet(PacketKind::Ack, 50));
        CHECK(d.bytes_total == 1350);
        CHECK(d.packets_all == 2);
        CHECK(d.stress_packets == 1);

        Packet cbr = control_packet(PacketKind::Cbr, 1000);
        ledger.record_packet(0, Direction::AtoB, cbr);
        CHECK(d.stress_packets == 1);

        ledger.record_packet(0, Direction::AtoB, content(7));
        CHECK(d.stress_packets == 2);
        CHECK(d.unique_payloads() == 1);
        CHECK(*stress(d) == doctest::Approx(2.0));

        ledger.record_packet(0, Direction::AtoB, content(8, 1250, PacketKind::MulticastData));
        CHECK(d.unique_payloads() == 2);
        CHECK(ledger.at(0, Direction::BtoA).packets_all == 0);
    }

    TEST_CASE("stress definition") {
        DirectionLedger d;
        CHECK_FALSE(stress(d).has_value());
        d.stress_packets = 24;
        d.fingerprints = {1, 2};
        CHECK(*stress(d) == doctest::Approx(12.0));
    }

    TEST_CASE("ledger agrees with engine counters") {
        const Topology t = hcdn::testing::line3(1'000'000, from_millis(1), 10);
        const RoutingTable routes(t);
        Simulator sim;
        Network net(sim, t, routes, RunRandom(2));
        LinkLedger ledger(t, true);
        net.add_observer(&ledger);
        net.set_loss(1, Direction::AtoB, 0.3);
        for (int i = 0; i < 40; ++i) {
            Packet p = content(static_cast<std::uint64_t>(i % 7));
            p.src = 0;
            p.dst = 2;
            net.send(p, [](const Packet&) {});
        }
        sim.run();
        for (LinkId l = 0; l < 2; ++l)
            for (Direction d : {Direction::AtoB, Direction::BtoA}) {
                const auto& e = ledger.at(l, d);
                const auto& s = net.stats(l, d);
                CHECK(e.bytes_total == s.bytes_in);
                CHECK(e.packets_all == s.packets_in);
                CHECK(e.drops == s.queue_drops + s.loss_drops);
                CHECK(e.packets_all >= e.unique_payloads());
                CHECK(e.fingerprint_log.size() == e.stress_packets);
                CHECK(std::set<std::uint64_t>(e.fingerprint_log.begin(), e.fingerprint_log.end()).size() ==
                      e.unique_payloads());
            }
        CHECK(ledger.at(0, Direction::AtoB).drops == 30);  // queue of 10 on a 40-packet burst
    }

    TEST_CASE("completion cdf") {
        std::vector<DownloadRecord> recs(3);
        recs[0].client = "a";
        recs[0].start = from_seconds(1);
        recs[0].finish = from_seconds(5);
        recs[1].client = "b";
        recs[1].finish = from_seconds(2);
        recs[2].client = "c";  // failed
        const auto cdf = completion_cdf(recs);
        REQUIRE(cdf.size() == 2);
        CHECK(cdf[0].time_s == doctest::Approx(2.0));
        CHECK(cdf[0].fraction == doctest::Approx(1.0 / 3));
        CHECK(cdf[1].time_s == doctest::Approx(4.0));
        CHECK(cdf[1].fraction == doctest::Approx(2.0 / 3));
        CHECK(mean_completion_s(recs) == doctest::Approx(3.0));

        std::vector<DownloadRecord> single(1);
        single[0].finish = from_seconds(7);
        const auto one = completion_cdf(single);
        REQUIRE(one.size() == 1);
        CHECK(one[0].time_s == doctest::Approx(7.0));
        CHECK(one[0].fraction == doctest::Approx(1.0));
        CHECK(completion_cdf({}).empty());
    }

    TEST_CASE("csv export") {
        const Topology t = hcdn::testing::pair(1'000'000, 0);
        const auto dir = std::filesystem::temp_directory_path() / "hcdn_metrics_csv";
        std::filesystem::remove_all(dir);
        LinkLedger ledger(t);
        export_csv(t, ledger, {}, dir);
        CHECK(slurp(dir / "completions.csv") == "client,start_s,finish_s,bytes,retx\n");
        CHECK(slurp(dir / "cdf.csv") == "time_s,fraction\n");
        CHECK(slurp(dir / "links.csv") ==
              "link,direction,bytes,packets_total,packets_unique,stress,drops,content_bytes\n"
              "sc,s->c,0,0,0,,0,0\n"
              "sc,c->s,0,0,0,,0,0\n");

        ledger.record_packet(0, Direction::AtoB, content(1));
        ledger.record_packet(0, Direction::AtoB, content(1));
        ledger.record_packet(0, Direction::AtoB, content(2));
        std::vector<DownloadRecord> recs(1);
        recs[0].client = "c";
        recs[0].finish = from_millis(1500);
        recs[0].bytes_received = 2500;
        export_csv(t, ledger, recs, dir);
        CHECK(slurp(dir / "links.csv").find("sc,s->c,3900,3,2,1.500000,0,3750\n") != std::string::npos);
        CHECK(slurp(dir / "completions.csv") == "client,start_s,finish_s,bytes,retx\nc,0.000000,1.500000,2500,0\n");
        CHECK(slurp(dir / "cdf.csv") == "time_s,fraction\n1.500000,1.000000\n");
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("downlink directions point away from the origin") {
        const Topology t = build_paper_topology();
        const RoutingTable routes(t);
        const NodeId seeder = t.nodes_of_kind(NodeKind::Seeder)[0];
        const auto core = downlink_directions(t, routes, seeder, LinkKind::Core);
        bool found = false;
        for (auto [l, d] : core)
            if (t.link(l).name == "coreLink3") {
                found = true;
                CHECK(t.node(t.link(l).target(d)).id == "coreRouter0");
            }
        CHECK(found);
        CHECK(core.size() == 3);  // coreLink0..2 join equidistant routers
        CHECK(downlink_directions(t, routes, seeder, LinkKind::Access).size() == 4);
    }

    TEST_CASE("format_fixed") {
        CHECK(format_fixed(12.0) == "12.000000");
        CHECK(format_fixed(1.0 / 3, 2) == "0.33");
    }
}
