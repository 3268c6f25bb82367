// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ulb {

// Rows per block; every packed tensor uses this M blocking factor.
inline constexpr int64_t kBlockM = 32;

/// 4-entry map from a 2-bit code to its signed 8-bit weight value.
/// The default reads the code as a two's-complement 2-bit integer.
struct Codebook4 {
    std::array<int8_t, 4> values{-2, -1, 0, 1};

    friend bool operator==(const Codebook4&, const Codebook4&) = default;
};

/// Dense pre-packing representation: one small integer code per element,
/// row-major. Codes are in [0, 3] for 2-bit tensors and [0, 1] for 1-bit.
struct DenseCodeMatrix {
    int64_t rows_m = 0;
    int64_t cols_k = 0;
    std::vector<uint8_t> codes;  // rows_m * cols_k entries
};

/// Dense signed 8-bit matrix, row-major. Output of decode_weights and the
/// weight operand of the int8 reference GEMV.
struct Int8Matrix {
    int64_t rows_m = 0;
    int64_t cols_k = 0;
    std::vector<int8_t> values;  // rows_m * cols_k entries
};

/// Bit-packed, blocked weight matrix. Payload is a sequence of fixed-size
/// block units ordered [mb][kb][kg] with mb = m/32, kb = k/block_k,
/// kg = (k mod block_k)/4. Each unit covers 32 rows x 4 contraction columns.
///
/// 2-bit units are 32 bytes = eight 32-bit little-endian words in the
/// VNNI4-interleaved layout: with m_local = m mod 32, m8 = m_local mod 8,
/// m4 = m_local div 8, k4 = k mod 4, the code of element (m, k) sits in
/// word m8 at bits [(k4*4 + m4)*2, +1]. Equivalently, unit byte 4*m8 + k4
/// carries the four m4 groups of (m8, k4) in bit pairs 0-1, 2-3, 4-5, 6-7.
///
/// 1-bit units are 16 bytes = four 32-bit little-endian words in
/// conventional VNNI4: word g = m4 covers rows 8g..8g+7 and the bit of
/// element (m, k) is bit m8*4 + k4 of that word.
struct PackedWeightTensor {
    int bit_width = 2;  // 1 or 2
    int64_t rows_m = 0;
    int64_t cols_k = 0;
    int64_t block_m = kBlockM;
    int64_t block_k = 0;
    std::optional<Codebook4> codebook;              // present iff bit_width == 2
    std::optional<std::vector<float>> row_scales;   // per-output-channel dequant scales
    std::vector<uint8_t> payload;                   // rows_m * cols_k * bit_width / 8 bytes
};

/// rows_m * cols_k * bit_width / 8, the exact payload size in bytes.
size_t packed_payload_bytes(int64_t rows_m, int64_t cols_k, int bit_width);

/// Largest divisor of cols_k that is a multiple of 4, capped at 512.
/// Throws std::invalid_argument when cols_k is not a positive multiple of 4.
int64_t default_block_k(int64_t cols_k);

/// Pack a 2-bit code matrix into the VNNI4-interleaved blocked layout.
/// block_k == 0 selects default_block_k(cols_k). Requires rows_m % 32 == 0,
/// cols_k % block_k == 0, block_k % 4 == 0 and every code in [0, 3];
/// violations throw std::invalid_argument naming the offending index.
PackedWeightTensor pack_int2(const DenseCodeMatrix& codes, int64_t block_k = 0,
                             const Codebook4& codebook = Codebook4{},
                             std::optional<std::vector<float>> row_scales = std::nullopt);

/// Pack a 1-bit code matrix into the conventional VNNI4 blocked layout.
/// Preconditions as pack_int2 with codes in [0, 1].
PackedWeightTensor pack_int1(const DenseCodeMatrix& codes, int64_t block_k = 0,
                             std::optional<std::vector<float>> row_scales = std::nullopt);

/// Inverse of pack_*: recover the dense code matrix from the payload.
DenseCodeMatrix decode_codes(const PackedWeightTensor& packed);

/// Expand the payload to dense int8 weights. 2-bit elements map through the
/// codebook; 1-bit elements map to +1 for bit 0 and -1 for bit 1. This is
/// the weight source of the testing oracle.
Int8Matrix decode_weights(const PackedWeightTensor& packed);

/// Error taxonomy of the ULBW stream format.
class UlbwError : public std::runtime_error {
  public:
    enum class Kind {
        bad_magic,
        unsupported_version,
        unsupported_bit_width,
        length_mismatch,
        invariant_violation,
        io_failure,
    };

    UlbwError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

/// Serialize to the ULBW binary format (all fields little-endian):
/// magic "ULBW", version u16 = 1, bit_width u8, reserved u8 = 0,
/// rows_m u32, cols_k u32, block_k u32, codebook flag u8 + 4 value bytes
/// (zeros if absent), scales flag u8 + rows_m IEEE-754 floats (only if
/// present), payload length u64, payload bytes.
void write_packed(const PackedWeightTensor& packed, std::ostream& sink);

/// Parse a ULBW stream; throws UlbwError with a distinct Kind per failure.
PackedWeightTensor read_packed(std::istream& source);

void write_packed_file(const PackedWeightTensor& packed, const std::string& path);
PackedWeightTensor read_packed_file(const std::string& path);

}  // namespace ulb
