// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "ulb/layout.hpp"

using namespace ulb;

namespace {

DenseCodeMatrix make_codes(int64_t m, int64_t k, uint8_t fill = 0) {
    DenseCodeMatrix c;
    c.rows_m = m;
    c.cols_k = k;
    c.codes.assign(static_cast<size_t>(m) * k, fill);
    return c;
}

DenseCodeMatrix random_codes(int64_t m, int64_t k, int bits, uint64_t seed) {
    DenseCodeMatrix c = make_codes(m, k);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, (1 << bits) - 1);
    for (auto& v : c.codes) v = static_cast<uint8_t>(dist(rng));
    return c;
}

// Independent bit-position oracle, straight from the layout definition.
// Returns (byte, bit) of the least-significant payload bit of element (m, k).
std::pair<size_t, int> expected_position_int2(int64_t m, int64_t k, int64_t cols_k, int64_t block_k) {
    const int64_t mb = m / 32, ml = m % 32;
    const int64_t m8 = ml % 8, m4 = ml / 8;
    const int64_t kb = k / block_k, kg = (k % block_k) / 4, k4 = k % 4;
    const int64_t unit = (mb * (cols_k / block_k) + kb) * (block_k / 4) + kg;
    const int64_t bit_in_word = (k4 * 4 + m4) * 2;
    return {static_cast<size_t>(unit * 32 + m8 * 4 + bit_in_word / 8), int(bit_in_word % 8)};
}

std::pair<size_t, int> expected_position_int1(int64_t m, int64_t k, int64_t cols_k, int64_t block_k) {
    const int64_t mb = m / 32, ml = m % 32;
    const int64_t m8 = ml % 8, m4 = ml / 8;
    const int64_t kb = k / block_k, kg = (k % block_k) / 4, k4 = k % 4;
    const int64_t unit = (mb * (cols_k / block_k) + kb) * (block_k / 4) + kg;
    const int64_t bit = m8 * 4 + k4;
    return {static_cast<size_t>(unit * 16 + m4 * 4 + bit / 8), int(bit % 8)};
}

}  // namespace

TEST_SUITE("layout") {

TEST_CASE("default_block_k picks the largest divisor multiple of 4 up to 512") {
    CHECK(default_block_k(4096) == 512);
    CHECK(default_block_k(512) == 512);
    CHECK(default_block_k(1600) == 400);
    CHECK(default_block_k(4352) == 272);  // 4352 = 2^8 * 17
    CHECK(default_block_k(4) == 4);
    CHECK(default_block_k(12) == 12);
    CHECK_THROWS_AS(default_block_k(6), std::invalid_argument);
    CHECK_THROWS_AS(default_block_k(0), std::invalid_argument);
}

TEST_CASE("payload size formula") {
    CHECK(packed_payload_bytes(32, 4, 2) == 32);
    CHECK(packed_payload_bytes(32, 4, 1) == 16);
    CHECK(packed_payload_bytes(1600, 1600, 2) == 640000);
    CHECK(packed_payload_bytes(4096, 14336, 1) == 4096.0 * 14336 / 8);
}

TEST_CASE("all-zero codes pack to all-zero payload") {
    const auto t2 = pack_int2(make_codes(64, 16), 8);
    CHECK(t2.payload.size() == packed_payload_bytes(64, 16, 2));
    CHECK(std::all_of(t2.payload.begin(), t2.payload.end(), [](uint8_t b) { return b == 0; }));

    const auto t1 = pack_int1(make_codes(64, 16), 8);
    CHECK(t1.payload.size() == packed_payload_bytes(64, 16, 1));
    CHECK(std::all_of(t1.payload.begin(), t1.payload.end(), [](uint8_t b) { return b == 0; }));
}

TEST_CASE("int2 one-hot element lands at the documented bit position") {
    // (m=9, k=2) in a 32x4 block: m8=1, m4=1, k4=2 -> bits 18-19 of word 1,
    // i.e. bits 2-3 of payload byte 6.
    auto codes = make_codes(32, 4);
    codes.codes[9 * 4 + 2] = 1;
    const auto t = pack_int2(codes, 4);
    CHECK(t.payload[6] == 0x04);
    size_t nonzero = 0;
    for (uint8_t b : t.payload) nonzero += b != 0;
    CHECK(nonzero == 1);

    const auto [byte, bit] = expected_position_int2(9, 2, 4, 4);
    CHECK(byte == 6);
    CHECK(bit == 2);
}

TEST_CASE("int1 one-hot element lands at the documented bit position") {
    // (m=8, k=0): m4=1 -> bit 0 of word 1 = payload byte 4, bit 0.
    auto codes = make_codes(32, 4);
    codes.codes[8 * 4 + 0] = 1;
    const auto t = pack_int1(codes, 4);
    CHECK(t.payload[4] == 0x01);
    size_t nonzero = 0;
    for (uint8_t b : t.payload) nonzero += b != 0;
    CHECK(nonzero == 1);

    const auto [byte, bit] = expected_position_int1(8, 0, 4, 4);
    CHECK(byte == 4);
    CHECK(bit == 0);
}

TEST_CASE("every element maps to its oracle bit position (injective, covering)") {
    // second config exercises multiple mb, kb and kg blocks
    struct Config {
        int64_t M, K, BK;
    };
    for (const auto& [M, K, BK] : {Config{32, 8, 8}, Config{64, 32, 16}}) {
        for (int bits : {1, 2}) {
            std::vector<int> seen(packed_payload_bytes(M, K, bits) * 8, 0);
            for (int64_t m = 0; m < M; ++m) {
                for (int64_t k = 0; k < K; ++k) {
                    auto codes = make_codes(M, K);
                    codes.codes[m * K + k] = 1;
                    const auto t = bits == 2 ? pack_int2(codes, BK) : pack_int1(codes, BK);
                    const auto [byte, bit] = bits == 2 ? expected_position_int2(m, k, K, BK)
                                                       : expected_position_int1(m, k, K, BK);
                    REQUIRE(t.payload[byte] == (1u << bit));
                    size_t nonzero = 0;
                    for (uint8_t b : t.payload) nonzero += b != 0;
                    REQUIRE(nonzero == 1);
                    seen[byte * 8 + bit] += 1;
                }
            }
            // 1-bit uses every payload bit once; 2-bit the low bit of each pair.
            const size_t used = std::count(seen.begin(), seen.end(), 1);
            CHECK(used == static_cast<size_t>(M * K));
            CHECK(std::count_if(seen.begin(), seen.end(), [](int c) { return c > 1; }) == 0);
            if (bits == 1) CHECK(used == seen.size());
        }
    }
}

TEST_CASE("pack/decode round trip, randomized") {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        const auto c2 = random_codes(32, 4, 2, seed);
        const auto t2 = pack_int2(c2, 4);
        CHECK(decode_codes(t2).codes == c2.codes);

        const auto c1 = random_codes(64, 8, 1, seed);
        const auto t1 = pack_int1(c1, 8);
        CHECK(decode_codes(t1).codes == c1.codes);
    }
    const auto big = random_codes(96, 1024, 2, 99);
    CHECK(decode_codes(pack_int2(big)).codes == big.codes);
}

TEST_CASE("decode_weights applies the codebook / sign rule") {
    const auto ones2 = pack_int2(make_codes(32, 4, 3), 4);  // code 3 -> +1 with default codebook
    const auto w2 = decode_weights(ones2);
    CHECK(std::all_of(w2.values.begin(), w2.values.end(), [](int8_t v) { return v == 1; }));

    const auto zeros1 = pack_int1(make_codes(32, 4), 4);  // bit 0 -> +1
    const auto w1 = decode_weights(zeros1);
    CHECK(std::all_of(w1.values.begin(), w1.values.end(), [](int8_t v) { return v == 1; }));

    const Codebook4 cb{{-7, 3, 0, 127}};
    const auto c = random_codes(32, 8, 2, 5);
    const auto w = decode_weights(pack_int2(c, 8, cb));
    for (size_t i = 0; i < c.codes.size(); ++i) {
        REQUIRE(w.values[i] == cb.values[c.codes[i]]);
    }
}

TEST_CASE("pack rejects bad inputs with the offending index") {
    CHECK_THROWS_AS(pack_int2(make_codes(31, 4), 4), std::invalid_argument);
    CHECK_THROWS_AS(pack_int2(make_codes(32, 6), 4), std::invalid_argument);
    CHECK_THROWS_AS(pack_int2(make_codes(32, 8), 6), std::invalid_argument);

    auto codes = make_codes(32, 4);
    codes.codes[9 * 4 + 2] = 4;  // out of range for 2-bit
    CHECK_THROWS_WITH_AS(pack_int2(codes, 4), doctest::Contains("(m=9, k=2)"),
                         std::invalid_argument);
    codes.codes[9 * 4 + 2] = 2;  // out of range for 1-bit
    CHECK_THROWS_AS(pack_int1(codes, 4), std::invalid_argument);

    CHECK_THROWS_AS(pack_int2(make_codes(32, 4), 4, Codebook4{},
                              std::vector<float>{1.0f}),  // wrong scale count
                    std::invalid_argument);
}

TEST_CASE("ULBW write/read round trip") {
    auto codes = random_codes(64, 16, 2, 7);
    std::vector<float> scales(64);
    for (size_t i = 0; i < scales.size(); ++i) scales[i] = 0.25f + 0.001f * i;
    const auto t = pack_int2(codes, 8, Codebook4{{-2, -1, 0, 1}}, scales);

    std::stringstream buf;
    write_packed(t, buf);
    const auto back = read_packed(buf);
    CHECK(back.bit_width == t.bit_width);
    CHECK(back.rows_m == t.rows_m);
    CHECK(back.cols_k == t.cols_k);
    CHECK(back.block_k == t.block_k);
    CHECK(back.codebook == t.codebook);
    CHECK(back.row_scales == t.row_scales);
    CHECK(back.payload == t.payload);

    // byte-exact: serializing the parsed tensor reproduces the stream
    std::stringstream buf2;
    write_packed(back, buf2);
    CHECK(buf.str() == buf2.str());

    const auto t1 = pack_int1(random_codes(32, 8, 1, 8), 8);
    std::stringstream buf3;
    write_packed(t1, buf3);
    const auto back1 = read_packed(buf3);
    CHECK_FALSE(back1.codebook.has_value());
    CHECK_FALSE(back1.row_scales.has_value());
    CHECK(back1.payload == t1.payload);
}

TEST_CASE("ULBW golden bytes") {
    // pins the on-disk format: 32x4 int2, one-hot (0,0) = 1, block_k 4,
    // default codebook, no scales.
    auto codes = make_codes(32, 4);
    codes.codes[0] = 1;
    std::stringstream buf;
    write_packed(pack_int2(codes, 4), buf);
    const std::string blob = buf.str();
    REQUIRE(blob.size() == 66);

    static const uint8_t golden[66] = {
        0x55, 0x4c, 0x42, 0x57,              // "ULBW"
        0x01, 0x00,                          // version 1
        0x02, 0x00,                          // bit_width 2, reserved
        0x20, 0x00, 0x00, 0x00,              // rows 32
        0x04, 0x00, 0x00, 0x00,              // cols 4
        0x04, 0x00, 0x00, 0x00,              // block_k 4
        0x01, 0xfe, 0xff, 0x00, 0x01,        // codebook flag + [-2,-1,0,1]
        0x00,                                // scales flag
        0x20, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // payload length 32
        0x01,                                // code 1 at element (0,0)
        // remaining 31 payload bytes are zero
    };
    for (size_t i = 0; i < 66; ++i) {
        REQUIRE(uint8_t(blob[i]) == (i < 35 ? golden[i] : 0));
    }
}

TEST_CASE("ULBW error taxonomy is distinct") {
    const auto t = pack_int2(random_codes(32, 4, 2, 1), 4);
    std::stringstream good;
    write_packed(t, good);
    const std::string blob = good.str();

    auto read_from = [](std::string s) {
        std::istringstream is(std::move(s));
        return read_packed(is);
    };

    SUBCASE("truncated payload -> length mismatch") {
        std::string cut = blob.substr(0, blob.size() - 5);
        try {
            read_from(cut);
            FAIL("expected UlbwError");
        } catch (const UlbwError& e) {
            CHECK(e.kind() == UlbwError::Kind::length_mismatch);
        }
    }
    SUBCASE("bad magic") {
        std::string bad = blob;
        bad[0] = 'X';
        try {
            read_from(bad);
            FAIL("expected UlbwError");
        } catch (const UlbwError& e) {
            CHECK(e.kind() == UlbwError::Kind::bad_magic);
        }
    }
    SUBCASE("unsupported version") {
        std::string bad = blob;
        bad[4] = 9;
        try {
            read_from(bad);
            FAIL("expected UlbwError");
        } catch (const UlbwError& e) {
            CHECK(e.kind() == UlbwError::Kind::unsupported_version);
        }
    }
    SUBCASE("bit_width 3 -> unsupported bit width") {
        std::string bad = blob;
        bad[6] = 3;
        try {
            read_from(bad);
            FAIL("expected UlbwError");
        } catch (const UlbwError& e) {
            CHECK(e.kind() == UlbwError::Kind::unsupported_bit_width);
        }
    }
    SUBCASE("payload length field inconsistent with shape -> length mismatch") {
        std::string bad = blob;
        // payload length u64 sits 8 bytes before the payload (which is 32 bytes)
        bad[bad.size() - 32 - 8] = 31;
        try {
            read_from(bad);
            FAIL("expected UlbwError");
        } catch (const UlbwError& e) {
            CHECK(e.kind() == UlbwError::Kind::length_mismatch);
        }
    }
    SUBCASE("codebook flag cleared on a 2-bit tensor -> invariant violation") {
        std::string bad = blob;
        bad[20] = 0;  // codebook flag offset: 4+2+1+1+4+4+4
        try {
            read_from(bad);
            FAIL("expected UlbwError");
        } catch (const UlbwError& e) {
            CHECK(e.kind() == UlbwError::Kind::invariant_violation);
        }
    }
}

}  // TEST_SUITE
