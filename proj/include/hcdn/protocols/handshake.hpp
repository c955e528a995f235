#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcdn/chunking.hpp"
#include "hcdn/types.hpp"

namespace hcdn {

using PeerId = int;

/// Chunk transfer handshake. Type1 requests a chunk; the holder answers
/// Type2 (accepted, with the upload slot), Type3a (chunk not held) or
/// Type3b (held, but no slot free); the requester confirms a Type2 with a
/// Type4 naming its own listening slot, after which data flows.
enum class HandshakeKind : std::uint8_t { Type1, Type2, Type3a, Type3b, Type4 };

std::string_view to_string(HandshakeKind k);

constexpr bool carries_port(HandshakeKind k) { return k == HandshakeKind::Type2 || k == HandshakeKind::Type4; }

struct HandshakeMessage {
    HandshakeKind kind = HandshakeKind::Type1;
    std::size_t chunk = 0;
    std::optional<int> port;  // set exactly when carries_port(kind)
    PeerId requester = -1;
    PeerId responder = -1;
    std::uint64_t session = 0;

    bool well_formed() const { return port.has_value() == carries_port(kind); }
};

/// Bounded set of concurrent transfer slots; slots are handed out lowest
/// index first.
class PortPool {
public:
    explicit PortPool(int capacity = 4);

    std::optional<int> reserve();
    void release(int slot);

    int capacity() const { return static_cast<int>(used_.size()); }
    int in_use() const { return in_use_; }
    bool full() const { return in_use_ == capacity(); }
    bool reserved(int slot) const { return slot >= 0 && slot < capacity() && used_[static_cast<std::size_t>(slot)]; }

private:
    std::vector<bool> used_;
    int in_use_ = 0;
};

/// Responder side of the handshake. `admitted` is false when reciprocation
/// has no upload slot for this requester; it is answered like an exhausted
/// pool. A Type2 reserves the slot it names.
HandshakeMessage handshake_respond(const PieceMap& have, PortPool& pool, bool admitted, const HandshakeMessage& type1);

/// One line of the protocol trace: a message sent, or a timer expiring.
struct HandshakeTraceEntry {
    enum class Event : std::uint8_t { Sent, RequestTimeout, ReservationExpired, DataTimeout };

    SimTime time = 0;
    Event event = Event::Sent;
    HandshakeKind kind = HandshakeKind::Type1;  // meaningful for Sent
    PeerId from = -1;
    PeerId to = -1;
    std::size_t chunk = 0;
    std::optional<int> port;

    friend bool operator==(const HandshakeTraceEntry&, const HandshakeTraceEntry&) = default;
};

std::string to_string(const HandshakeTraceEntry& e);

}  // namespace hcdn
