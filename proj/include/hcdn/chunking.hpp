#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hcdn {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::vector<std::uint8_t>;
using DigestFunction = std::function<Digest(std::span<const std::uint8_t>)>;

Digest sha1_digest(std::span<const std::uint8_t> data);
std::string to_hex(const Digest& d);

inline constexpr std::size_t kDefaultPieceSize = 256 * 1024;

struct FileSpec {
    std::string name;
    std::size_t size = 0;
    std::size_t piece_size = kDefaultPieceSize;
    std::vector<Digest> piece_digests;

    std::size_t piece_count() const { return piece_digests.size(); }
    std::size_t piece_length(std::size_t index) const;
};

struct Piece {
    std::size_t index = 0;
    std::shared_ptr<const Bytes> bytes;
    Digest digest;
};

class ChunkError : public std::runtime_error {
public:
    enum class Reason { EmptyFile, BadPieceSize, MissingPiece, DigestMismatch };
    ChunkError(Reason reason, std::size_t index, const std::string& msg)
        : std::runtime_error(msg), reason_(reason), index_(index) {}
    Reason reason() const { return reason_; }
    std::size_t index() const { return index_; }

private:
    Reason reason_;
    std::size_t index_;
};

/// Splits `file` into fixed-size pieces; the last one may be short.
std::pair<FileSpec, std::vector<Piece>> make_pieces(std::span<const std::uint8_t> file, std::size_t piece_size,
                                                    std::string name = "file", const DigestFunction& digest = sha1_digest);

bool verify_piece(const Piece& piece, const Digest& expected, const DigestFunction& digest = sha1_digest);
bool verify_bytes(std::span<const std::uint8_t> bytes, const Digest& expected, const DigestFunction& digest = sha1_digest);

/// Reassembles the file. Pieces may arrive in any order; every index must be
/// present exactly once and match its digest.
Bytes assemble(const FileSpec& spec, std::span<const Piece> pieces, const DigestFunction& digest = sha1_digest);

/// Seeded pseudo-random file content for simulated transfers.
Bytes synthetic_file(std::size_t size, std::uint64_t seed);

/// Which pieces a peer holds. Pieces become held only through mark_verified,
/// which checks the digest first.
class PieceMap {
public:
    PieceMap() = default;
    explicit PieceMap(std::size_t count) : held_(count, false) {}

    std::size_t size() const { return held_.size(); }
    std::size_t count() const { return count_; }
    bool has(std::size_t i) const { return held_.at(i); }
    bool complete() const { return count_ == held_.size(); }

    /// Marks the piece held iff `bytes` matches the expected digest.
    bool mark_verified(const FileSpec& spec, std::size_t index, std::span<const std::uint8_t> bytes,
                       const DigestFunction& digest = sha1_digest);

    const std::vector<bool>& bits() const { return held_; }

private:
    std::vector<bool> held_;
    std::size_t count_ = 0;
};

}  // namespace hcdn
