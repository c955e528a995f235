#include <doctest.h>

#include <cmath>

#include "hcdn/engine.hpp"
#include "hcdn/flow.hpp"
#include "support.hpp"

using namespace hcdn;

namespace {

Packet data_packet(std::uint32_t payload, std::uint64_t fp = 1) {
    Packet p;
    p.kind = PacketKind::Data;
    p.payload_bytes = payload;
    p.fingerprint = fp;
    return p;
}

struct Harness {
    Topology topo;
    RoutingTable routes;
    Simulator sim;
    RunRandom random;
    Network net;
    explicit Harness(Topology t, std::uint64_t seed = 1)
        : topo(std::move(t)), routes(topo), random(seed), net(sim, topo, routes, random) {}
};

}  // namespace

TEST_SUITE("engine") {
    TEST_CASE("schedule ordering") {
        Simulator sim;
        std::vector<int> order;
        sim.schedule(0, [&] { order.push_back(1); });
        sim.schedule(from_millis(5), [&] { order.push_back(3); });
        sim.schedule(from_millis(5), [&] { order.push_back(4); });
        sim.schedule(from_millis(1), [&] { order.push_back(2); });
        CHECK(sim.step());
        CHECK(order == std::vector<int>{1});
        CHECK(sim.now() == 0);
        sim.run();
        CHECK(order == std::vector<int>{1, 2, 3, 4});
        CHECK(sim.now() == from_millis(5));
        CHECK_THROWS_AS(sim.schedule(from_millis(4), [] {}), SimulationError);
    }

    TEST_CASE("cancel and run_until") {
        Simulator sim;
        int fired = 0;
        const auto id = sim.schedule(from_millis(2), [&] { ++fired; });
        sim.schedule(from_millis(3), [&] { ++fired; });
        sim.schedule(from_millis(9), [&] { ++fired; });
        sim.cancel(id);
        sim.run_until(from_millis(5));
        CHECK(fired == 1);
        CHECK(sim.now() == from_millis(5));
        sim.run();
        CHECK(fired == 2);
    }

    TEST_CASE("clock never goes backwards") {
        Simulator sim;
        RandomEngine rng(3);
        SimTime last = 0;
        bool monotone = true;
        std::function<void()> spawn = [&] {
            monotone = monotone && sim.now() >= last;
            last = sim.now();
            if (sim.events_fired() < 2000) {
                sim.schedule_in(static_cast<SimTime>(uniform_index(rng, 5)), spawn);
                sim.schedule_in(static_cast<SimTime>(uniform_index(rng, 5)), [] {});
            }
        };
        sim.schedule(0, spawn);
        sim.run();
        CHECK(monotone);
    }

    TEST_CASE("serialization delay") {
        CHECK(serialization_delay(1250, 10'000'000) == from_millis(1));
        CHECK(serialization_delay(64, 512'000) == from_millis(1));
        CHECK(serialization_delay(1, 3) == 2'666'666'667);  // rounded up
    }

    TEST_CASE("1250-byte packet on an idle 10 Mb/s, 20 ms link arrives after 21 ms") {
        Harness h(hcdn::testing::pair(10'000'000, from_millis(20)));
        Packet p = control_packet(PacketKind::Control, 1250);
        SimTime arrived = -1;
        h.sim.schedule(from_millis(7), [&] { h.net.transmit(p, 0, Direction::AtoB, [&](const Packet&) { arrived = h.sim.now(); }); });
        h.sim.run();
        CHECK(arrived == from_millis(7 + 21));
    }

    TEST_CASE("back-to-back packets arrive one serialization apart") {
        Harness h(hcdn::testing::pair(10'000'000, from_millis(20)));
        std::vector<SimTime> at;
        for (int i = 0; i < 2; ++i)
            h.net.transmit(control_packet(PacketKind::Control, 1250), 0, Direction::AtoB,
                           [&](const Packet&) { at.push_back(h.sim.now()); });
        h.sim.run();
        REQUIRE(at.size() == 2);
        CHECK(at[0] == from_millis(21));
        CHECK(at[1] - at[0] == from_millis(1));
    }

    TEST_CASE("drop-tail: the 51st simultaneous packet is dropped") {
        Harness h(hcdn::testing::pair(10'000'000, from_millis(20)));
        int delivered = 0;
        for (int i = 0; i < 51; ++i)
            h.net.transmit(control_packet(PacketKind::Control, 1300), 0, Direction::AtoB, [&](const Packet&) { ++delivered; });
        CHECK(h.net.stats(0, Direction::AtoB).queue_drops == 1);
        h.sim.run();
        CHECK(delivered == 50);
        const auto& st = h.net.stats(0, Direction::AtoB);
        CHECK(st.packets_in == 51);
        CHECK(st.packets_in == st.delivered + st.queue_drops + st.loss_drops);
        CHECK(h.net.stats(0, Direction::BtoA).packets_in == 0);
    }

    TEST_CASE("induced loss") {
        auto count = [](double rate, std::uint64_t seed) {
            Harness h(hcdn::testing::pair(1'000'000'000, 0, 20'000), seed);
            h.net.set_loss(0, Direction::AtoB, rate);
            for (int i = 0; i < 10'000; ++i)
                h.net.transmit(control_packet(PacketKind::Control, 100), 0, Direction::AtoB, [](const Packet&) {});
            h.sim.run();
            const auto& st = h.net.stats(0, Direction::AtoB);
            CHECK(st.packets_in == st.delivered + st.queue_drops + st.loss_drops);
            return st.loss_drops;
        };
        CHECK(count(0.0, 1) == 0);
        CHECK(count(1.0, 1) == 10'000);
        const double sigma = std::sqrt(10'000 * 0.04 * 0.96);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto drops = static_cast<double>(count(0.04, seed));
            CHECK(std::abs(drops - 400.0) <= 3 * sigma);
        }
        Harness h(hcdn::testing::pair(1'000'000, 0));
        CHECK_THROWS_AS(h.net.set_loss(0, Direction::AtoB, 1.5), ConfigError);
        CHECK_THROWS_AS(h.net.set_loss(0, Direction::AtoB, -0.1), ConfigError);
    }

    TEST_CASE("unicast forwarding over a route") {
        Harness h(hcdn::testing::line3(10'000'000, from_millis(20)));
        Packet p = data_packet(1250);
        p.src = h.topo.node_id("a");
        p.dst = h.topo.node_id("c");
        SimTime at = -1;
        h.net.send(p, [&](const Packet&) { at = h.sim.now(); });
        h.sim.run();
        CHECK(at == 2 * (serialization_delay(p.size(), 10'000'000) + from_millis(20)));
    }

    TEST_CASE("CBR spacing") {
        Harness h(hcdn::testing::pair(2'000'000, from_millis(5)));
        RandomEngine jitter(1);
        auto none = start_cbr(h.net, 0, 1, 0.0, 1000, jitter);
        CHECK(none == nullptr);
        auto cbr = start_cbr(h.net, 0, 1, 0.10, 1000, jitter);
        REQUIRE(cbr);
        CHECK(cbr->interval() == from_millis(40));
        h.sim.run_until(from_seconds(4));
        cbr->stop();
        CHECK(cbr->packets_sent() >= 99);
        CHECK(cbr->packets_sent() <= 101);
        CHECK(h.net.stats(0, Direction::AtoB).bytes_in == cbr->packets_sent() * 1000);
    }

    TEST_CASE("identical runs give identical trace hashes") {
        auto run = [](std::uint64_t seed) {
            Harness h(hcdn::testing::line3(2'000'000, from_millis(5)), seed);
            h.net.set_loss(0, Direction::AtoB, 0.2);
            auto file = std::make_shared<const Bytes>(synthetic_file(50'000, 3));
            auto f = flow_send(h.net, h.topo.node_id("a"), h.topo.node_id("c"), segment_payload(file, 0, file->size(), 1, -1), {}, {});
            h.sim.run();
            return h.sim.trace_hash();
        };
        CHECK(run(4) == run(4));
        CHECK(run(4) != run(5));
    }
}

TEST_SUITE("flow") {
    TEST_CASE("lossless flow delivers in order without retransmission") {
        Harness h(hcdn::testing::line3(10'000'000, from_millis(2)));
        auto file = std::make_shared<const Bytes>(synthetic_file(4 * kPayloadBytes, 8));
        std::vector<std::size_t> offsets;
        FlowResult done;
        FlowCallbacks cb;
        cb.on_deliver = [&](const PayloadDescriptor& d) { offsets.push_back(d.offset); };
        cb.on_sender_complete = [&](const FlowResult& r) { done = r; };
        auto f = flow_send(h.net, h.topo.node_id("a"), h.topo.node_id("c"), segment_payload(file, 0, file->size(), 1, 0), {},
                           cb);
        h.sim.run();
        CHECK(offsets == std::vector<std::size_t>{0, 1250, 2500, 3750});
        CHECK(done.ok);
        CHECK(done.retransmissions == 0);
        CHECK(f->max_in_flight() <= 8);
    }

    TEST_CASE("1 MB over an idle 2 Mb/s bottleneck") {
        // short delays keep the bandwidth-delay product under the 8-packet window
        Harness h(hcdn::testing::line3(2'000'000, from_millis(2)));
        auto file = std::make_shared<const Bytes>(synthetic_file(1 << 20, 1));
        FlowResult done;
        FlowCallbacks cb;
        cb.on_receiver_complete = [&](const FlowResult& r) { done = r; };
        auto f = flow_send(h.net, h.topo.node_id("a"), h.topo.node_id("c"), segment_payload(file, 0, file->size(), 1, -1), {}, cb);
        h.sim.run();
        REQUIRE(done.ok);
        const double analytic = 8.0 * (1 << 20) / 2e6 + 4 * 0.002;
        CHECK(to_seconds(done.finish - done.start) == doctest::Approx(analytic).epsilon(0.10));
    }

    TEST_CASE("flows survive heavy loss and reassemble exact bytes") {
        for (double loss : {0.05, 0.2, 0.5}) {
            for (std::uint64_t seed = 1; seed <= 4; ++seed) {
                Harness h(hcdn::testing::line3(10'000'000, from_millis(1)), seed);
                h.net.set_loss(1, Direction::AtoB, loss);
                h.net.set_loss(1, Direction::BtoA, loss);
                auto file = std::make_shared<const Bytes>(synthetic_file(20'000 + seed * 777, seed));
                Bytes got(file->size());
                std::size_t next = 0;
                bool in_order = true;
                FlowResult done;
                FlowCallbacks cb;
                cb.on_deliver = [&](const PayloadDescriptor& d) {
                    in_order = in_order && d.offset == next;
                    next = d.offset + d.length;
                    std::copy_n(d.source->begin() + static_cast<std::ptrdiff_t>(d.offset), d.length,
                                got.begin() + static_cast<std::ptrdiff_t>(d.offset));
                };
                cb.on_receiver_complete = [&](const FlowResult& r) { done = r; };
                FlowOptions opts;
                opts.max_retries = 64;
                auto f = flow_send(h.net, h.topo.node_id("a"), h.topo.node_id("c"),
                                   segment_payload(file, 0, file->size(), 1, -1), opts, cb);
                h.sim.run();
                CHECK(done.ok);
                CHECK(in_order);
                CHECK(got == *file);
                CHECK(f->max_in_flight() <= opts.window);
                if (loss >= 0.5) CHECK(f->retransmissions() > 0);
            }
        }
    }

    TEST_CASE("flow fails after max_retries on a dead link") {
        Harness h(hcdn::testing::pair(10'000'000, from_millis(1)));
        h.net.set_loss(0, Direction::AtoB, 1.0);
        auto file = std::make_shared<const Bytes>(synthetic_file(3000, 2));
        std::optional<FlowResult> sender, receiver;
        FlowCallbacks cb;
        cb.on_sender_complete = [&](const FlowResult& r) { sender = r; };
        cb.on_receiver_complete = [&](const FlowResult& r) { receiver = r; };
        FlowOptions opts;
        opts.max_retries = 3;
        auto f = flow_send(h.net, 0, 1, segment_payload(file, 0, file->size(), 1, -1), opts, cb);
        h.sim.run();
        REQUIRE(sender);
        CHECK_FALSE(sender->ok);
    }

    TEST_CASE("goodput never exceeds the bottleneck") {
        Harness h(hcdn::testing::line3(1'000'000, 0));
        auto file = std::make_shared<const Bytes>(synthetic_file(200'000, 2));
        FlowResult done;
        FlowCallbacks cb;
        cb.on_receiver_complete = [&](const FlowResult& r) { done = r; };
        auto f = flow_send(h.net, 0, 2, segment_payload(file, 0, file->size(), 1, -1), {}, cb);
        h.sim.run();
        REQUIRE(done.ok);
        CHECK(8.0 * static_cast<double>(file->size()) / to_seconds(done.finish - done.start) <= 1e6);
    }

    TEST_CASE("fingerprints depend only on content identity") {
        CHECK(payload_fingerprint(1, 2, 0, 1250) == payload_fingerprint(1, 2, 0, 1250));
        CHECK(payload_fingerprint(1, 2, 0, 1250) != payload_fingerprint(1, 3, 0, 1250));
        CHECK(payload_fingerprint(1, 2, 0, 1250) != payload_fingerprint(1, 2, 1250, 1250));
        CHECK(payload_fingerprint(1, 2, 0, 1250) != payload_fingerprint(2, 2, 0, 1250));
        auto src = std::make_shared<const Bytes>(Bytes(3000, 0));
        const auto segs = segment_payload(src, 0, 3000, 1, 0);
        REQUIRE(segs.size() == 3);
        CHECK(segs[2].length == 500);
    }
}
