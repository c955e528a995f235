#include "hcdn/protocols/availability.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace hcdn {

void AvailabilityTable::add(std::size_t piece, PeerId peer) {
    auto& h = holders_.at(piece);
    auto it = std::lower_bound(h.begin(), h.end(), peer);
    if (it == h.end() || *it != peer) h.insert(it, peer);
}

void AvailabilityTable::remove(std::size_t piece, PeerId peer) {
    auto& h = holders_.at(piece);
    auto it = std::lower_bound(h.begin(), h.end(), peer);
    if (it != h.end() && *it == peer) h.erase(it);
}

void AvailabilityTable::add_all(PeerId peer, const std::vector<bool>& bitfield) {
    for (std::size_t i = 0; i < bitfield.size() && i < holders_.size(); ++i)
        if (bitfield[i]) add(i, peer);
}

bool AvailabilityTable::holds(std::size_t piece, PeerId peer) const {
    const auto& h = holders_.at(piece);
    return std::binary_search(h.begin(), h.end(), peer);
}

std::optional<std::size_t> select_piece(const AvailabilityTable& table, const PieceMap& mine, SelectionPhase phase,
                                        RandomEngine& rng, const std::function<bool(std::size_t)>& eligible) {
    std::vector<std::size_t> wanted;
    std::size_t rarest = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < table.piece_count(); ++i) {
        if (mine.has(i) || table.count(i) == 0) continue;
        if (eligible && !eligible(i)) continue;
        if (phase == SelectionPhase::RarestFirst) {
            if (table.count(i) < rarest) {
                rarest = table.count(i);
                wanted.clear();
            } else if (table.count(i) > rarest) {
                continue;
            }
        }
        wanted.push_back(i);
    }
    if (wanted.empty()) return std::nullopt;
    return wanted[uniform_index(rng, wanted.size())];
}

void Tracker::register_peer(PeerId peer) {
    if (!registered(peer)) peers_.push_back(peer);
}

bool Tracker::registered(PeerId peer) const { return std::find(peers_.begin(), peers_.end(), peer) != peers_.end(); }

std::vector<PeerId> Tracker::announce(PeerId requester, RandomEngine& rng, std::size_t list_size) const {
    if (!registered(requester)) throw std::invalid_argument("tracker: unknown peer " + std::to_string(requester));
    std::vector<PeerId> pool;
    pool.reserve(peers_.size());
    for (PeerId p : peers_)
        if (p != requester) pool.push_back(p);
    const std::size_t n = std::min(list_size, pool.size());
    // partial Fisher-Yates
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + uniform_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

}  // namespace hcdn
