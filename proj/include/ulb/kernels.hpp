// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "ulb/layout.hpp"
#include "ulb/quant.hpp"

namespace ulb {

/// Kernel implementation selector. The scalar path is always available and
/// defines the contract; the simd path must agree bit-exactly and exists
/// only on hosts with the required vector instructions (AVX2 on x86).
enum class Variant { scalar, simd };

bool simd_available() noexcept;

/// simd when available on this host, scalar otherwise.
Variant preferred_variant() noexcept;

const char* variant_name(Variant v) noexcept;
Variant parse_variant(const std::string& name);

/// Dense int8 GEMV, exact signed 32-bit accumulation (no saturation):
/// acc[m] = sum_k weights(m, k) * act[k]. The scalar path is the testing
/// oracle for the packed kernels.
AccumulatorVector gemv_int8_ref(const Int8Matrix& weights, const QuantizedVector& act,
                                Variant v = Variant::scalar);

/// 2-bit GEMV over the VNNI4-interleaved payload. Bit-exactly equal to
/// gemv_int8_ref(decode_weights(packed), act).
AccumulatorVector gemv_int2(const PackedWeightTensor& packed, const QuantizedVector& act,
                            Variant v = preferred_variant());

/// 1-bit GEMV over the VNNI4 payload; weights are +1 for bit 0, -1 for bit 1.
AccumulatorVector gemv_int1(const PackedWeightTensor& packed, const QuantizedVector& act,
                            Variant v = preferred_variant());

// Row-block-range entry points used by the parallel dispatcher. They compute
// accumulators for rows [mb_begin*32, mb_end*32) and store them at the same
// absolute offsets of out; out must have room for rows_m values.
void gemv_int2_blocks(const PackedWeightTensor& packed, std::span<const int8_t> act, Variant v,
                      int64_t mb_begin, int64_t mb_end, int32_t* out);
void gemv_int1_blocks(const PackedWeightTensor& packed, std::span<const int8_t> act, Variant v,
                      int64_t mb_begin, int64_t mb_end, int32_t* out);
void gemv_int8_rows(const Int8Matrix& weights, std::span<const int8_t> act, Variant v,
                    int64_t row_begin, int64_t row_end, int32_t* out);

/// Up-convert one 32-byte 2-bit unit to 128 int8 values laid out as four
/// [m8][k4] groups of 32 (group j at offsets [32j, 32j+32) holds rows
/// 8j..8j+7). Exposed so the unpack step is independently testable.
std::array<int8_t, 128> upconvert_block_int2(std::span<const uint8_t, 32> unit,
                                             const Codebook4& codebook);

/// Up-convert one 32-bit 1-bit word to 32 int8 values in [m8][k4] order:
/// +1 where the bit is 0, -1 where it is 1.
std::array<int8_t, 32> upconvert_word_int1(uint32_t word);

}  // namespace ulb
