#include "hcdn/flow.hpp"

#include <algorithm>

namespace hcdn {

std::uint64_t payload_fingerprint(std::uint64_t file_id, std::int64_t piece, std::size_t offset, std::size_t length) {
    std::uint64_t h = hash_combine(0xf17e, file_id);
    h = hash_combine(h, static_cast<std::uint64_t>(piece));
    h = hash_combine(h, offset);
    return hash_combine(h, length);
}

std::vector<PayloadDescriptor> segment_payload(std::shared_ptr<const Bytes> source, std::size_t offset, std::size_t length,
                                               std::uint64_t file_id, std::int64_t piece, std::uint32_t segment_bytes) {
    std::vector<PayloadDescriptor> out;
    out.reserve((length + segment_bytes - 1) / segment_bytes);
    for (std::size_t done = 0; done < length; done += segment_bytes) {
        PayloadDescriptor d;
        d.length = static_cast<std::uint32_t>(std::min<std::size_t>(segment_bytes, length - done));
        d.fingerprint = payload_fingerprint(file_id, piece, done, d.length);
        d.source = source;
        d.offset = offset + done;
        out.push_back(std::move(d));
    }
    return out;
}

SimTime flow_rto(const Topology& t, const std::vector<Hop>& forward, const FlowOptions& opts) {
    const std::uint32_t largest = std::max(opts.header_bytes + kPayloadBytes, kHeaderBytes + kPayloadBytes);
    SimTime base = 0;
    SimTime drain = 0;
    for (const Hop& h : forward) {
        const auto& l = t.link(h.link);
        const SimTime data_ser = serialization_delay(largest, l.bandwidth_bps);
        const SimTime ack_ser = serialization_delay(opts.header_bytes, l.bandwidth_bps);
        base += 2 * l.propagation_delay + data_ser + ack_ser;
        // both directions may hold a full queue of data-sized packets, plus the one on the wire
        drain += 2 * (static_cast<SimTime>(l.queue_capacity) + 1) * data_ser;
    }
    return 4 * base + drain;
}

// ---------------------------------------------------------------------------
// ReliableFlow

ReliableFlow::ReliableFlow(Network& net, NodeId src, NodeId dst, std::vector<PayloadDescriptor> payload, FlowOptions opts,
                           FlowCallbacks callbacks)
    : net_(net),
      src_(src),
      dst_(dst),
      payload_(std::move(payload)),
      opts_(opts),
      cb_(std::move(callbacks)),
      state_(payload_.size(), SegState::Unsent),
      attempts_(payload_.size(), 0),
      timers_(payload_.size(), 0),
      received_(payload_.size(), false) {
    if (opts_.window < 1) throw ConfigError("flow window must be >= 1");
    rto_ = opts_.rto_override > 0 ? opts_.rto_override : flow_rto(net.topology(), net.routes().route(src, dst), opts_);
}

std::shared_ptr<ReliableFlow> flow_send(Network& net, NodeId src, NodeId dst, std::vector<PayloadDescriptor> payload,
                                        FlowOptions opts, FlowCallbacks callbacks) {
    auto flow = std::make_shared<ReliableFlow>(net, src, dst, std::move(payload), opts, std::move(callbacks));
    flow->start();
    return flow;
}

FlowResult ReliableFlow::result(bool ok) const {
    FlowResult r;
    r.ok = ok;
    r.start = started_;
    r.finish = net_.now();
    r.retransmissions = retransmissions_;
    r.payload_bytes = delivered_bytes_;
    return r;
}

void ReliableFlow::start() {
    started_ = net_.now();
    if (opts_.handshake) {
        send_syn();
        return;
    }
    established_ = true;
    receiver_open_ = true;
    if (payload_.empty()) {
        receiver_done_ = true;
        sender_done_ = true;
        if (cb_.on_receiver_complete) cb_.on_receiver_complete(result(true));
        if (cb_.on_sender_complete) cb_.on_sender_complete(result(true));
        return;
    }
    fill_window();
}

void ReliableFlow::send_syn() {
    ++syn_attempts_;
    Packet p = control_packet(PacketKind::Control, opts_.header_bytes, SynBody{weak_from_this(), false});
    p.src = src_;
    p.dst = dst_;
    net_.send(std::move(p), [](const Packet& arrived) {
        const auto& body = std::any_cast<const SynBody&>(arrived.body);
        if (auto f = body.flow.lock()) f->on_syn(false);
    });
    const int attempt = syn_attempts_;
    const SimTime wait = rto_ << std::min(attempt - 1, opts_.max_backoff_exponent);
    syn_timer_ = net_.sim().schedule_in(wait, [weak = weak_from_this(), attempt] {
        if (auto f = weak.lock()) f->on_syn_timeout(attempt);
    });
}

void ReliableFlow::on_syn_timeout(int attempt) {
    if (established_ || sender_done_ || attempt != syn_attempts_) return;
    if (syn_attempts_ > opts_.max_retries) {
        fail();
        return;
    }
    ++retransmissions_;
    send_syn();
}

void ReliableFlow::on_syn(bool reply) {
    if (sender_done_ && receiver_done_) return;
    if (!reply) {
        // receiver side: open and answer every SYN so a lost reply is recovered
        const bool first = !receiver_open_;
        receiver_open_ = true;
        Packet p = control_packet(PacketKind::Control, opts_.header_bytes, SynBody{weak_from_this(), true});
        p.src = dst_;
        p.dst = src_;
        net_.send(std::move(p), [](const Packet& arrived) {
            const auto& body = std::any_cast<const SynBody&>(arrived.body);
            if (auto f = body.flow.lock()) f->on_syn(true);
        });
        if (first && payload_.empty()) {
            receiver_done_ = true;
            if (cb_.on_receiver_complete) cb_.on_receiver_complete(result(true));
        }
        return;
    }
    if (established_) return;
    established_ = true;
    net_.sim().cancel(syn_timer_);
    if (payload_.empty()) {
        sender_done_ = true;
        if (cb_.on_sender_complete) cb_.on_sender_complete(result(true));
        return;
    }
    fill_window();
}

void ReliableFlow::fill_window() {
    while (!sender_done_ && in_flight_ < opts_.window && next_unsent_ < payload_.size()) transmit_segment(next_unsent_++);
}

void ReliableFlow::transmit_segment(std::uint32_t seq) {
    if (state_[seq] != SegState::InFlight) {
        state_[seq] = SegState::InFlight;
        ++in_flight_;
        max_in_flight_ = std::max(max_in_flight_, in_flight_);
    }
    const int attempt = ++attempts_[seq];
    const auto& seg = payload_[seq];
    Packet p;
    p.kind = PacketKind::Data;
    p.header_bytes = opts_.header_bytes;
    p.payload_bytes = seg.length;
    p.fingerprint = seg.fingerprint;
    p.src = src_;
    p.dst = dst_;
    p.body = DataBody{weak_from_this(), seq};
    net_.send(std::move(p), [](const Packet& arrived) {
        const auto& body = std::any_cast<const DataBody&>(arrived.body);
        if (auto f = body.flow.lock()) f->on_data(body.seq);
    });
    const SimTime wait = rto_ << std::min(attempt - 1, opts_.max_backoff_exponent);
    timers_[seq] = net_.sim().schedule_in(wait, [weak = weak_from_this(), seq, attempt] {
        if (auto f = weak.lock()) f->on_timeout(seq, attempt);
    });
}

void ReliableFlow::on_timeout(std::uint32_t seq, int attempt) {
    if (sender_done_ || state_[seq] != SegState::InFlight || attempts_[seq] != attempt) return;
    if (attempt > opts_.max_retries) {
        fail();
        return;
    }
    ++retransmissions_;
    transmit_segment(seq);
}

void ReliableFlow::on_data(std::uint32_t seq) {
    if (receiver_done_ && sender_done_) return;
    receiver_open_ = true;
    if (!received_[seq]) {
        received_[seq] = true;
        while (next_expected_ < received_.size() && received_[next_expected_]) {
            const auto& seg = payload_[next_expected_];
            delivered_bytes_ += seg.length;
            if (cb_.on_deliver) cb_.on_deliver(seg);
            ++next_expected_;
        }
    }
    Packet ack = control_packet(PacketKind::Ack, opts_.header_bytes, AckBody{weak_from_this(), next_expected_, seq});
    ack.src = dst_;
    ack.dst = src_;
    net_.send(std::move(ack), [](const Packet& arrived) {
        const auto& body = std::any_cast<const AckBody&>(arrived.body);
        if (auto f = body.flow.lock()) f->on_ack(body.cumulative, body.seq);
    });
    if (!receiver_done_ && next_expected_ == received_.size()) {
        receiver_done_ = true;
        if (cb_.on_receiver_complete) cb_.on_receiver_complete(result(true));
    }
}

void ReliableFlow::mark_acked(std::uint32_t seq) {
    if (state_[seq] == SegState::Acked) return;
    if (state_[seq] == SegState::InFlight) {
        --in_flight_;
        net_.sim().cancel(timers_[seq]);
    }
    state_[seq] = SegState::Acked;
    ++acked_;
}

void ReliableFlow::on_ack(std::uint32_t cumulative, std::uint32_t seq) {
    if (sender_done_) return;
    for (; ack_floor_ < cumulative; ++ack_floor_) mark_acked(ack_floor_);
    mark_acked(seq);
    if (acked_ == payload_.size()) {
        sender_done_ = true;
        if (cb_.on_sender_complete) cb_.on_sender_complete(result(true));
        return;
    }
    fill_window();
}

void ReliableFlow::fail() {
    for (std::size_t s = 0; s < state_.size(); ++s)
        if (state_[s] == SegState::InFlight) net_.sim().cancel(timers_[s]);
    net_.sim().cancel(syn_timer_);
    const bool notify_sender = !sender_done_;
    const bool notify_receiver = !receiver_done_;
    sender_done_ = true;
    receiver_done_ = true;
    // the receiver learns of the failure the way a connection reset would surface
    if (notify_receiver && cb_.on_receiver_complete) cb_.on_receiver_complete(result(false));
    if (notify_sender && cb_.on_sender_complete) cb_.on_sender_complete(result(false));
}

void ReliableFlow::abort() {
    for (std::size_t s = 0; s < state_.size(); ++s)
        if (state_[s] == SegState::InFlight) net_.sim().cancel(timers_[s]);
    net_.sim().cancel(syn_timer_);
    sender_done_ = true;
    receiver_done_ = true;
}

// ---------------------------------------------------------------------------
// CBR

CbrSource::CbrSource(Network& net, NodeId src, NodeId dst, SimTime interval, std::uint32_t packet_size)
    : net_(net),
      src_(src),
      dst_(dst),
      interval_(interval),
      packet_size_(packet_size),
      flow_tag_(hash_combine(0xcb7, (static_cast<std::uint64_t>(src) << 32) | static_cast<std::uint32_t>(dst))) {}

void CbrSource::start(SimTime first_at) {
    running_ = true;
    net_.sim().schedule(first_at, [weak = weak_from_this()] {
        if (auto s = weak.lock()) s->emit();
    });
}

void CbrSource::emit() {
    if (!running_) return;
    Packet p;
    p.kind = PacketKind::Cbr;
    p.header_bytes = std::min(kHeaderBytes, packet_size_);
    p.payload_bytes = packet_size_ - p.header_bytes;
    if (p.payload_bytes > 0) p.fingerprint = hash_combine(flow_tag_, sent_);
    p.src = src_;
    p.dst = dst_;
    ++sent_;
    net_.send(std::move(p), [](const Packet&) {});
    net_.sim().schedule_in(interval_, [weak = weak_from_this()] {
        if (auto s = weak.lock()) s->emit();
    });
}

std::shared_ptr<CbrSource> start_cbr(Network& net, NodeId src, NodeId dst, double rate_fraction,
                                     std::uint32_t packet_size, RandomEngine& jitter) {
    if (!(rate_fraction >= 0.0 && rate_fraction <= 1.0)) throw ConfigError("CBR rate fraction must be within [0, 1]");
    if (packet_size == 0) throw ConfigError("CBR packet size must be > 0");
    if (rate_fraction == 0.0) return nullptr;
    const auto bottleneck = bottleneck_bps(net.topology(), net.routes().route(src, dst));
    const double offered_bps = rate_fraction * static_cast<double>(bottleneck);
    const SimTime interval = from_seconds(8.0 * packet_size / offered_bps);
    auto source = std::make_shared<CbrSource>(net, src, dst, interval, packet_size);
    const auto offset = static_cast<SimTime>(uniform01(jitter) * static_cast<double>(interval));
    source->start(net.now() + offset);
    return source;
}

}  // namespace hcdn
