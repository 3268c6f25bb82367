// SPDX-License-Identifier: Apache-2.0
#include "ulb/layout.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ulb {

namespace {

constexpr char kMagic[4] = {'U', 'L', 'B', 'W'};
constexpr uint16_t kFormatVersion = 1;

void check_pack_preconditions(const DenseCodeMatrix& codes, int64_t block_k, int bit_width,
                              const std::optional<std::vector<float>>& row_scales) {
    if (codes.rows_m <= 0 || codes.cols_k <= 0) {
        throw std::invalid_argument("pack: matrix dimensions must be positive");
    }
    if (codes.rows_m % kBlockM != 0) {
        throw std::invalid_argument("pack: rows_m = " + std::to_string(codes.rows_m) +
                                    " is not a multiple of 32");
    }
    if (block_k % 4 != 0 || block_k <= 0) {
        throw std::invalid_argument("pack: block_k = " + std::to_string(block_k) +
                                    " is not a positive multiple of 4");
    }
    if (codes.cols_k % block_k != 0) {
        throw std::invalid_argument("pack: cols_k = " + std::to_string(codes.cols_k) +
                                    " is not a multiple of block_k = " + std::to_string(block_k));
    }
    if (codes.codes.size() != static_cast<size_t>(codes.rows_m) * static_cast<size_t>(codes.cols_k)) {
        throw std::invalid_argument("pack: codes array has " + std::to_string(codes.codes.size()) +
                                    " entries, expected " +
                                    std::to_string(codes.rows_m * codes.cols_k));
    }
    const uint8_t max_code = bit_width == 2 ? 3 : 1;
    for (size_t i = 0; i < codes.codes.size(); ++i) {
        if (codes.codes[i] > max_code) {
            throw std::invalid_argument(
                "pack: code " + std::to_string(int(codes.codes[i])) + " at (m=" +
                std::to_string(i / codes.cols_k) + ", k=" + std::to_string(i % codes.cols_k) +
                ") exceeds " + std::to_string(int(max_code)));
        }
    }
    if (row_scales) {
        if (static_cast<int64_t>(row_scales->size()) != codes.rows_m) {
            throw std::invalid_argument("pack: row_scales has " + std::to_string(row_scales->size()) +
                                        " entries, expected rows_m = " + std::to_string(codes.rows_m));
        }
        for (size_t i = 0; i < row_scales->size(); ++i) {
            if (!std::isfinite((*row_scales)[i])) {
                throw std::invalid_argument("pack: row_scales[" + std::to_string(i) + "] is not finite");
            }
        }
    }
}

void validate_tensor(const PackedWeightTensor& t) {
    if (t.bit_width != 1 && t.bit_width != 2) {
        throw std::invalid_argument("packed tensor: bit_width must be 1 or 2");
    }
    if (t.rows_m <= 0 || t.cols_k <= 0 || t.rows_m % kBlockM != 0 || t.block_k <= 0 ||
        t.block_k % 4 != 0 || t.cols_k % t.block_k != 0 || t.block_m != kBlockM) {
        throw std::invalid_argument("packed tensor: blocking invariants violated");
    }
    if (t.codebook.has_value() != (t.bit_width == 2)) {
        throw std::invalid_argument("packed tensor: codebook must be present iff bit_width == 2");
    }
    if (t.payload.size() != packed_payload_bytes(t.rows_m, t.cols_k, t.bit_width)) {
        throw std::invalid_argument("packed tensor: payload size mismatch");
    }
    if (t.row_scales && static_cast<int64_t>(t.row_scales->size()) != t.rows_m) {
        throw std::invalid_argument("packed tensor: row_scales length mismatch");
    }
}

}  // namespace

size_t packed_payload_bytes(int64_t rows_m, int64_t cols_k, int bit_width) {
    return static_cast<size_t>(rows_m) * static_cast<size_t>(cols_k) * bit_width / 8;
}

int64_t default_block_k(int64_t cols_k) {
    if (cols_k <= 0 || cols_k % 4 != 0) {
        throw std::invalid_argument("default_block_k: cols_k = " + std::to_string(cols_k) +
                                    " is not a positive multiple of 4");
    }
    for (int64_t bk = std::min<int64_t>(cols_k, 512); bk >= 4; bk -= 4) {
        if (cols_k % bk == 0) return bk;
    }
    return 4;  // unreachable: 4 divides cols_k
}

PackedWeightTensor pack_int2(const DenseCodeMatrix& codes, int64_t block_k,
                             const Codebook4& codebook,
                             std::optional<std::vector<float>> row_scales) {
    if (block_k == 0) block_k = default_block_k(codes.cols_k);
    check_pack_preconditions(codes, block_k, 2, row_scales);

    PackedWeightTensor t;
    t.bit_width = 2;
    t.rows_m = codes.rows_m;
    t.cols_k = codes.cols_k;
    t.block_k = block_k;
    t.codebook = codebook;
    t.row_scales = std::move(row_scales);
    t.payload.assign(packed_payload_bytes(codes.rows_m, codes.cols_k, 2), 0);

    const int64_t n_kb = codes.cols_k / block_k;
    const int64_t n_kg = block_k / 4;
    const uint8_t* src = codes.codes.data();
    uint8_t* unit = t.payload.data();
    for (int64_t mb = 0; mb < codes.rows_m / kBlockM; ++mb) {
        for (int64_t kb = 0; kb < n_kb; ++kb) {
            for (int64_t kg = 0; kg < n_kg; ++kg, unit += 32) {
                const int64_t k0 = kb * block_k + kg * 4;
                for (int m4 = 0; m4 < 4; ++m4) {
                    const int shift = 2 * m4;
                    for (int m8 = 0; m8 < 8; ++m8) {
                        const uint8_t* row = src + (mb * kBlockM + m4 * 8 + m8) * codes.cols_k + k0;
                        for (int k4 = 0; k4 < 4; ++k4) {
                            unit[4 * m8 + k4] |= static_cast<uint8_t>(row[k4] << shift);
                        }
                    }
                }
            }
        }
    }
    return t;
}

PackedWeightTensor pack_int1(const DenseCodeMatrix& codes, int64_t block_k,
                             std::optional<std::vector<float>> row_scales) {
    if (block_k == 0) block_k = default_block_k(codes.cols_k);
    check_pack_preconditions(codes, block_k, 1, row_scales);

    PackedWeightTensor t;
    t.bit_width = 1;
    t.rows_m = codes.rows_m;
    t.cols_k = codes.cols_k;
    t.block_k = block_k;
    t.row_scales = std::move(row_scales);
    t.payload.assign(packed_payload_bytes(codes.rows_m, codes.cols_k, 1), 0);

    const int64_t n_kb = codes.cols_k / block_k;
    const int64_t n_kg = block_k / 4;
    const uint8_t* src = codes.codes.data();
    uint8_t* unit = t.payload.data();
    for (int64_t mb = 0; mb < codes.rows_m / kBlockM; ++mb) {
        for (int64_t kb = 0; kb < n_kb; ++kb) {
            for (int64_t kg = 0; kg < n_kg; ++kg, unit += 16) {
                const int64_t k0 = kb * block_k + kg * 4;
                for (int m4 = 0; m4 < 4; ++m4) {      // word g = m4
                    for (int m8 = 0; m8 < 8; ++m8) {
                        const uint8_t* row = src + (mb * kBlockM + m4 * 8 + m8) * codes.cols_k + k0;
                        for (int k4 = 0; k4 < 4; ++k4) {
                            const int bit = m8 * 4 + k4;
                            unit[4 * m4 + bit / 8] |= static_cast<uint8_t>(row[k4] << (bit % 8));
                        }
                    }
                }
            }
        }
    }
    return t;
}

DenseCodeMatrix decode_codes(const PackedWeightTensor& t) {
    validate_tensor(t);
    DenseCodeMatrix codes;
    codes.rows_m = t.rows_m;
    codes.cols_k = t.cols_k;
    codes.codes.assign(static_cast<size_t>(t.rows_m) * t.cols_k, 0);

    const int64_t n_kb = t.cols_k / t.block_k;
    const int64_t n_kg = t.block_k / 4;
    const int64_t unit_bytes = t.bit_width == 2 ? 32 : 16;
    const uint8_t* unit = t.payload.data();
    for (int64_t mb = 0; mb < t.rows_m / kBlockM; ++mb) {
        for (int64_t kb = 0; kb < n_kb; ++kb) {
            for (int64_t kg = 0; kg < n_kg; ++kg, unit += unit_bytes) {
                const int64_t k0 = kb * t.block_k + kg * 4;
                for (int m4 = 0; m4 < 4; ++m4) {
                    for (int m8 = 0; m8 < 8; ++m8) {
                        uint8_t* row = codes.codes.data() + (mb * kBlockM + m4 * 8 + m8) * t.cols_k + k0;
                        for (int k4 = 0; k4 < 4; ++k4) {
                            if (t.bit_width == 2) {
                                row[k4] = (unit[4 * m8 + k4] >> (2 * m4)) & 3;
                            } else {
                                const int bit = m8 * 4 + k4;
                                row[k4] = (unit[4 * m4 + bit / 8] >> (bit % 8)) & 1;
                            }
                        }
                    }
                }
            }
        }
    }
    return codes;
}

Int8Matrix decode_weights(const PackedWeightTensor& t) {
    DenseCodeMatrix codes = decode_codes(t);
    Int8Matrix out;
    out.rows_m = t.rows_m;
    out.cols_k = t.cols_k;
    out.values.resize(codes.codes.size());
    if (t.bit_width == 2) {
        const auto& lut = t.codebook->values;
        for (size_t i = 0; i < codes.codes.size(); ++i) out.values[i] = lut[codes.codes[i]];
    } else {
        for (size_t i = 0; i < codes.codes.size(); ++i) {
            out.values[i] = codes.codes[i] ? int8_t{-1} : int8_t{1};
        }
    }
    return out;
}

namespace {

void put_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw UlbwError(UlbwError::Kind::io_failure, "ULBW: write failed");
}

void put_u16(std::ostream& os, uint16_t v) {
    uint8_t b[2] = {uint8_t(v & 0xff), uint8_t(v >> 8)};
    put_bytes(os, b, 2);
}

void put_u32(std::ostream& os, uint32_t v) {
    uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
    put_bytes(os, b, 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = uint8_t(v >> (8 * i));
    put_bytes(os, b, 8);
}

bool get_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    return static_cast<size_t>(is.gcount()) == n;
}

uint16_t get_u16(std::istream& is) {
    uint8_t b[2];
    if (!get_bytes(is, b, 2)) throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated header");
    return uint16_t(b[0]) | uint16_t(b[1]) << 8;
}

uint32_t get_u32(std::istream& is) {
    uint8_t b[4];
    if (!get_bytes(is, b, 4)) throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated header");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

uint64_t get_u64(std::istream& is) {
    uint8_t b[8];
    if (!get_bytes(is, b, 8)) throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated header");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_packed(const PackedWeightTensor& t, std::ostream& sink) {
    try {
        validate_tensor(t);
    } catch (const std::invalid_argument& e) {
        throw UlbwError(UlbwError::Kind::invariant_violation, e.what());
    }
    put_bytes(sink, kMagic, 4);
    put_u16(sink, kFormatVersion);
    uint8_t bw = static_cast<uint8_t>(t.bit_width);
    uint8_t reserved = 0;
    put_bytes(sink, &bw, 1);
    put_bytes(sink, &reserved, 1);
    put_u32(sink, static_cast<uint32_t>(t.rows_m));
    put_u32(sink, static_cast<uint32_t>(t.cols_k));
    put_u32(sink, static_cast<uint32_t>(t.block_k));
    uint8_t cb_flag = t.codebook ? 1 : 0;
    put_bytes(sink, &cb_flag, 1);
    uint8_t cb_bytes[4] = {0, 0, 0, 0};
    if (t.codebook) {
        for (int i = 0; i < 4; ++i) cb_bytes[i] = static_cast<uint8_t>(t.codebook->values[i]);
    }
    put_bytes(sink, cb_bytes, 4);
    uint8_t sc_flag = t.row_scales ? 1 : 0;
    put_bytes(sink, &sc_flag, 1);
    if (t.row_scales) {
        for (float s : *t.row_scales) put_u32(sink, std::bit_cast<uint32_t>(s));
    }
    put_u64(sink, t.payload.size());
    put_bytes(sink, t.payload.data(), t.payload.size());
    sink.flush();
}

PackedWeightTensor read_packed(std::istream& source) {
    char magic[4];
    if (!get_bytes(source, magic, 4)) {
        throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated header");
    }
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw UlbwError(UlbwError::Kind::bad_magic, "ULBW: bad magic");
    }
    const uint16_t version = get_u16(source);
    if (version != kFormatVersion) {
        throw UlbwError(UlbwError::Kind::unsupported_version,
                        "ULBW: unsupported format version " + std::to_string(version));
    }
    uint8_t bw = 0, reserved = 0;
    if (!get_bytes(source, &bw, 1) || !get_bytes(source, &reserved, 1)) {
        throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated header");
    }
    if (bw != 1 && bw != 2) {
        throw UlbwError(UlbwError::Kind::unsupported_bit_width,
                        "ULBW: unsupported bit width " + std::to_string(int(bw)));
    }

    PackedWeightTensor t;
    t.bit_width = bw;
    t.rows_m = get_u32(source);
    t.cols_k = get_u32(source);
    t.block_k = get_u32(source);

    uint8_t cb_flag = 0;
    uint8_t cb_bytes[4];
    if (!get_bytes(source, &cb_flag, 1) || !get_bytes(source, cb_bytes, 4)) {
        throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated header");
    }
    if (cb_flag > 1) {
        throw UlbwError(UlbwError::Kind::invariant_violation, "ULBW: codebook flag must be 0 or 1");
    }
    if (cb_flag) {
        Codebook4 cb;
        for (int i = 0; i < 4; ++i) cb.values[i] = static_cast<int8_t>(cb_bytes[i]);
        t.codebook = cb;
    }
    if (cb_flag != (bw == 2 ? 1 : 0)) {
        throw UlbwError(UlbwError::Kind::invariant_violation,
                        "ULBW: codebook must be present iff bit_width == 2");
    }

    uint8_t sc_flag = 0;
    if (!get_bytes(source, &sc_flag, 1)) {
        throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated header");
    }
    if (sc_flag > 1) {
        throw UlbwError(UlbwError::Kind::invariant_violation, "ULBW: scales flag must be 0 or 1");
    }
    if (sc_flag) {
        std::vector<float> scales(static_cast<size_t>(t.rows_m));
        for (auto& s : scales) {
            s = std::bit_cast<float>(get_u32(source));
            if (!std::isfinite(s)) {
                throw UlbwError(UlbwError::Kind::invariant_violation, "ULBW: non-finite row scale");
            }
        }
        t.row_scales = std::move(scales);
    }

    const uint64_t payload_len = get_u64(source);
    constexpr int64_t kMaxDim = int64_t{1} << 28;
    if (t.rows_m <= 0 || t.cols_k <= 0 || t.rows_m > kMaxDim || t.cols_k > kMaxDim ||
        t.rows_m % kBlockM != 0 || t.block_k <= 0 || t.block_k % 4 != 0 ||
        t.cols_k % t.block_k != 0) {
        throw UlbwError(UlbwError::Kind::invariant_violation, "ULBW: blocking invariants violated");
    }
    if (payload_len != packed_payload_bytes(t.rows_m, t.cols_k, t.bit_width)) {
        throw UlbwError(UlbwError::Kind::length_mismatch,
                        "ULBW: payload length field " + std::to_string(payload_len) +
                            " does not match shape");
    }
    t.payload.resize(payload_len);
    if (!get_bytes(source, t.payload.data(), payload_len)) {
        throw UlbwError(UlbwError::Kind::length_mismatch, "ULBW: truncated payload");
    }
    return t;
}

void write_packed_file(const PackedWeightTensor& packed, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UlbwError(UlbwError::Kind::io_failure, "ULBW: cannot open " + path + " for writing");
    write_packed(packed, os);
}

PackedWeightTensor read_packed_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UlbwError(UlbwError::Kind::io_failure, "ULBW: cannot open " + path);
    return read_packed(is);
}

}  // namespace ulb
