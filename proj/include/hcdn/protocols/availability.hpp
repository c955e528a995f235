#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hcdn/chunking.hpp"
#include "hcdn/protocols/handshake.hpp"
#include "hcdn/rng.hpp"

namespace hcdn {

/// Per-peer view of which neighbors hold which pieces. Fed only by
/// have-announcements, bitfields exchanged on connect, and island markers.
class AvailabilityTable {
public:
    AvailabilityTable() = default;
    explicit AvailabilityTable(std::size_t pieces) : holders_(pieces) {}

    void add(std::size_t piece, PeerId peer);
    void remove(std::size_t piece, PeerId peer);
    void add_all(PeerId peer, const std::vector<bool>& bitfield);

    const std::vector<PeerId>& holders(std::size_t piece) const { return holders_.at(piece); }
    std::size_t count(std::size_t piece) const { return holders_.at(piece).size(); }
    bool holds(std::size_t piece, PeerId peer) const;
    std::size_t piece_count() const { return holders_.size(); }

private:
    std::vector<std::vector<PeerId>> holders_;  // each kept sorted
};

enum class SelectionPhase : std::uint8_t { RandomFirst, RarestFirst };

/// Random-first until the first piece verifies, rarest-first afterwards.
inline SelectionPhase selection_phase(const PieceMap& mine) {
    return mine.count() == 0 ? SelectionPhase::RandomFirst : SelectionPhase::RarestFirst;
}

/// Picks the next piece to fetch among pieces not held, passing `eligible`,
/// and held by at least one known peer. Random-first draws uniformly;
/// rarest-first takes the minimum holder count, ties drawn uniformly.
std::optional<std::size_t> select_piece(const AvailabilityTable& table, const PieceMap& mine, SelectionPhase phase,
                                        RandomEngine& rng,
                                        const std::function<bool(std::size_t)>& eligible = {});

/// Swarm registry handing out random peer lists.
class Tracker {
public:
    void register_peer(PeerId peer);
    bool registered(PeerId peer) const;
    std::size_t size() const { return peers_.size(); }

    /// Uniform random subset of min(list_size, registered - 1) peers other
    /// than `requester`. Throws std::invalid_argument for an unknown peer.
    std::vector<PeerId> announce(PeerId requester, RandomEngine& rng, std::size_t list_size) const;

private:
    std::vector<PeerId> peers_;  // registration order
};

}  // namespace hcdn
