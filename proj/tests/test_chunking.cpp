#include <doctest.h>

#include "hcdn/chunking.hpp"
#include "hcdn/rng.hpp"

using namespace hcdn;

TEST_SUITE("chunking") {
    TEST_CASE("piece counts") {
        const Bytes mb = synthetic_file(1 << 20, 1);
        auto [spec, pieces] = make_pieces(mb, 256 * 1024);
        CHECK(pieces.size() == 4);
        CHECK(spec.piece_count() == 4);

        const Bytes one = synthetic_file(1, 1);
        auto [s1, p1] = make_pieces(one, 4096);
        REQUIRE(p1.size() == 1);
        CHECK(p1[0].bytes->size() == 1);

        const Bytes plus = synthetic_file((1 << 20) + 1, 1);
        auto [s5, p5] = make_pieces(plus, 256 * 1024);
        REQUIRE(p5.size() == 5);
        CHECK(p5[4].bytes->size() == 1);
        CHECK(s5.piece_length(4) == 1);
        CHECK(s5.piece_length(0) == 256 * 1024);
    }

    TEST_CASE("make_pieces errors") {
        CHECK_THROWS_AS(make_pieces(Bytes{}, 10), ChunkError);
        CHECK_THROWS_AS(make_pieces(Bytes{1, 2}, 0), ChunkError);
    }

    TEST_CASE("digests are SHA-1 over exact piece bytes") {
        const Bytes abc{'a', 'b', 'c'};
        CHECK(to_hex(sha1_digest(abc)) == "a9993e364706816aba3e25717850c26c9cd0d89d");
        auto [spec, pieces] = make_pieces(synthetic_file(5000, 2), 1024);
        for (std::size_t i = 0; i < pieces.size(); ++i) CHECK(spec.piece_digests[i] == sha1_digest(*pieces[i].bytes));
    }

    TEST_CASE("verify_piece") {
        auto [spec, pieces] = make_pieces(synthetic_file(4096, 3), 1024);
        CHECK(verify_piece(pieces[1], spec.piece_digests[1]));
        Bytes flipped = *pieces[1].bytes;
        flipped[17] ^= 0x01;
        CHECK_FALSE(verify_bytes(flipped, spec.piece_digests[1]));
        Bytes truncated(pieces[1].bytes->begin(), pieces[1].bytes->end() - 1);
        CHECK_FALSE(verify_bytes(truncated, spec.piece_digests[1]));
    }

    TEST_CASE("every single-bit mutation is detected") {
        auto [spec, pieces] = make_pieces(synthetic_file(64, 4), 16);
        for (const auto& p : pieces)
            for (std::size_t byte = 0; byte < p.bytes->size(); ++byte)
                for (int bit = 0; bit < 8; ++bit) {
                    Bytes m = *p.bytes;
                    m[byte] ^= static_cast<std::uint8_t>(1u << bit);
                    CHECK_FALSE(verify_bytes(m, spec.piece_digests[p.index]));
                }
    }

    TEST_CASE("assemble round trip and errors") {
        const Bytes file = synthetic_file(1 << 20, 5);
        auto [spec, pieces] = make_pieces(file, 256 * 1024);
        CHECK(assemble(spec, pieces) == file);

        std::vector<Piece> shuffled{pieces[3], pieces[0], pieces[2], pieces[1]};
        CHECK(assemble(spec, shuffled) == file);

        std::vector<Piece> missing{pieces[0], pieces[1], pieces[3]};
        try {
            assemble(spec, missing);
            FAIL("expected error");
        } catch (const ChunkError& e) {
            CHECK(e.reason() == ChunkError::Reason::MissingPiece);
            CHECK(e.index() == 2);
            CHECK(std::string(e.what()).find('2') != std::string::npos);
        }

        std::vector<Piece> corrupt = pieces;
        auto bad = std::make_shared<Bytes>(*corrupt[1].bytes);
        (*bad)[0] ^= 0xff;
        corrupt[1].bytes = bad;
        try {
            assemble(spec, corrupt);
            FAIL("expected error");
        } catch (const ChunkError& e) {
            CHECK(e.reason() == ChunkError::Reason::DigestMismatch);
            CHECK(e.index() == 1);
        }
    }

    TEST_CASE("round trip over random sizes") {
        RandomEngine rng(21);
        for (int i = 0; i < 40; ++i) {
            const std::size_t size = 1 + uniform_index(rng, 4u << 20);
            const std::size_t piece = 1 + uniform_index(rng, std::min<std::size_t>(size, 1u << 20));
            if (size / piece > 20000) continue;  // keep the test fast
            const Bytes file = synthetic_file(size, i);
            auto [spec, pieces] = make_pieces(file, piece);
            CHECK(pieces.size() == (size + piece - 1) / piece);
            CHECK(assemble(spec, pieces) == file);
        }
    }

    TEST_CASE("PieceMap marks only verified pieces") {
        auto [spec, pieces] = make_pieces(synthetic_file(3000, 6), 1000);
        PieceMap m(3);
        CHECK(m.count() == 0);
        Bytes wrong = *pieces[0].bytes;
        wrong[5] ^= 1;
        CHECK_FALSE(m.mark_verified(spec, 0, wrong));
        CHECK_FALSE(m.has(0));
        CHECK(m.mark_verified(spec, 0, *pieces[0].bytes));
        CHECK(m.mark_verified(spec, 0, *pieces[0].bytes));
        CHECK(m.count() == 1);
        CHECK(m.mark_verified(spec, 2, *pieces[2].bytes));
        CHECK(m.mark_verified(spec, 1, *pieces[1].bytes));
        CHECK(m.complete());
    }

    TEST_CASE("synthetic files are seeded") {
        CHECK(synthetic_file(1000, 1) == synthetic_file(1000, 1));
        CHECK(synthetic_file(1000, 1) != synthetic_file(1000, 2));
    }
}
