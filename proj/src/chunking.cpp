#include "hcdn/chunking.hpp"

#include <openssl/evp.h>

#include <algorithm>

#include "hcdn/rng.hpp"

namespace hcdn {

Digest sha1_digest(std::span<const std::uint8_t> data) {
    Digest out(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha1(), nullptr) != 1)
        throw std::runtime_error("EVP_Digest(sha1) failed");
    out.resize(len);
    return out;
}

std::string to_hex(const Digest& d) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(d.size() * 2);
    for (auto b : d) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0xf]);
    }
    return s;
}

std::size_t FileSpec::piece_length(std::size_t index) const {
    const std::size_t begin = index * piece_size;
    return std::min(piece_size, size - begin);
}

std::pair<FileSpec, std::vector<Piece>> make_pieces(std::span<const std::uint8_t> file, std::size_t piece_size,
                                                    std::string name, const DigestFunction& digest) {
    if (file.empty()) throw ChunkError(ChunkError::Reason::EmptyFile, 0, "cannot split an empty file");
    if (piece_size == 0) throw ChunkError(ChunkError::Reason::BadPieceSize, 0, "piece size must be >= 1");

    FileSpec spec;
    spec.name = std::move(name);
    spec.size = file.size();
    spec.piece_size = piece_size;
    std::vector<Piece> pieces;
    const std::size_t count = (file.size() + piece_size - 1) / piece_size;
    pieces.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto chunk = file.subspan(i * piece_size, std::min(piece_size, file.size() - i * piece_size));
        Piece p;
        p.index = i;
        p.bytes = std::make_shared<const Bytes>(chunk.begin(), chunk.end());
        p.digest = digest(chunk);
        spec.piece_digests.push_back(p.digest);
        pieces.push_back(std::move(p));
    }
    return {std::move(spec), std::move(pieces)};
}

bool verify_bytes(std::span<const std::uint8_t> bytes, const Digest& expected, const DigestFunction& digest) {
    return digest(bytes) == expected;
}

bool verify_piece(const Piece& piece, const Digest& expected, const DigestFunction& digest) {
    if (!piece.bytes) return false;
    return verify_bytes(*piece.bytes, expected, digest);
}

Bytes assemble(const FileSpec& spec, std::span<const Piece> pieces, const DigestFunction& digest) {
    std::vector<const Piece*> by_index(spec.piece_count(), nullptr);
    for (const auto& p : pieces)
        if (p.index < by_index.size()) by_index[p.index] = &p;

    Bytes out;
    out.reserve(spec.size);
    for (std::size_t i = 0; i < by_index.size(); ++i) {
        const Piece* p = by_index[i];
        if (!p || !p->bytes)
            throw ChunkError(ChunkError::Reason::MissingPiece, i, "missing piece " + std::to_string(i));
        if (p->bytes->size() != spec.piece_length(i) || !verify_piece(*p, spec.piece_digests[i], digest))
            throw ChunkError(ChunkError::Reason::DigestMismatch, i, "digest mismatch on piece " + std::to_string(i));
        out.insert(out.end(), p->bytes->begin(), p->bytes->end());
    }
    return out;
}

Bytes synthetic_file(std::size_t size, std::uint64_t seed) {
    Bytes out(size);
    RandomEngine rng(splitmix64(seed));
    std::size_t i = 0;
    while (i < size) {
        auto word = rng();
        for (int k = 0; k < 8 && i < size; ++k, ++i) {
            out[i] = static_cast<std::uint8_t>(word & 0xff);
            word >>= 8;
        }
    }
    return out;
}

bool PieceMap::mark_verified(const FileSpec& spec, std::size_t index, std::span<const std::uint8_t> bytes,
                             const DigestFunction& digest) {
    if (index >= held_.size()) return false;
    if (bytes.size() != spec.piece_length(index) || !verify_bytes(bytes, spec.piece_digests[index], digest)) return false;
    if (!held_[index]) {
        held_[index] = true;
        ++count_;
    }
    return true;
}

}  // namespace hcdn
