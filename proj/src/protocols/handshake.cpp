#include "hcdn/protocols/handshake.hpp"

#include <sstream>
#include <stdexcept>

namespace hcdn {

std::string_view to_string(HandshakeKind k) {
    switch (k) {
        case HandshakeKind::Type1: return "Type1";
        case HandshakeKind::Type2: return "Type2";
        case HandshakeKind::Type3a: return "Type3a";
        case HandshakeKind::Type3b: return "Type3b";
        case HandshakeKind::Type4: return "Type4";
    }
    return "?";
}

PortPool::PortPool(int capacity) : used_(static_cast<std::size_t>(capacity), false) {
    if (capacity < 1) throw ConfigError("port pool capacity must be >= 1");
}

std::optional<int> PortPool::reserve() {
    for (std::size_t i = 0; i < used_.size(); ++i)
        if (!used_[i]) {
            used_[i] = true;
            ++in_use_;
            return static_cast<int>(i);
        }
    return std::nullopt;
}

void PortPool::release(int slot) {
    if (!reserved(slot)) throw std::logic_error("releasing port slot " + std::to_string(slot) + " that is not reserved");
    used_[static_cast<std::size_t>(slot)] = false;
    --in_use_;
}

HandshakeMessage handshake_respond(const PieceMap& have, PortPool& pool, bool admitted, const HandshakeMessage& type1) {
    if (type1.kind != HandshakeKind::Type1) throw std::invalid_argument("handshake_respond expects a Type1 message");
    HandshakeMessage reply;
    reply.chunk = type1.chunk;
    reply.requester = type1.requester;
    reply.responder = type1.responder;
    reply.session = type1.session;
    if (type1.chunk >= have.size() || !have.has(type1.chunk)) {
        reply.kind = HandshakeKind::Type3a;
        return reply;
    }
    if (!admitted || pool.full()) {
        reply.kind = HandshakeKind::Type3b;
        return reply;
    }
    reply.kind = HandshakeKind::Type2;
    reply.port = pool.reserve();
    return reply;
}

std::string to_string(const HandshakeTraceEntry& e) {
    std::ostringstream out;
    out << "t=" << e.time << "ns ";
    switch (e.event) {
        case HandshakeTraceEntry::Event::Sent: out << to_string(e.kind); break;
        case HandshakeTraceEntry::Event::RequestTimeout: out << "RequestTimeout"; break;
        case HandshakeTraceEntry::Event::ReservationExpired: out << "ReservationExpired"; break;
        case HandshakeTraceEntry::Event::DataTimeout: out << "DataTimeout"; break;
    }
    out << ' ' << e.from << "->" << e.to << " chunk=" << e.chunk;
    if (e.port) out << " port=" << *e.port;
    return out.str();
}

}  // namespace hcdn
