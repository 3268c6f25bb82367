// SPDX-License-Identifier: Apache-2.0
#include "ulb/kernels.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace ulb {

bool simd_available() noexcept {
#if ULB_HAVE_AVX2
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Variant preferred_variant() noexcept {
    return simd_available() ? Variant::simd : Variant::scalar;
}

const char* variant_name(Variant v) noexcept {
    return v == Variant::scalar ? "scalar" : "simd";
}

Variant parse_variant(const std::string& name) {
    if (name == "scalar") return Variant::scalar;
    if (name == "simd") return Variant::simd;
    throw std::invalid_argument("unknown kernel variant '" + name + "'");
}

namespace {

void check_simd_requested(Variant v) {
    if (v == Variant::simd && !simd_available()) {
        throw std::invalid_argument("simd kernel variant is not available on this host");
    }
}

void check_packed_input(const PackedWeightTensor& packed, std::span<const int8_t> act,
                        int expected_bits, int64_t mb_begin, int64_t mb_end) {
    if (packed.bit_width != expected_bits) {
        throw std::invalid_argument("gemv_int" + std::to_string(expected_bits) +
                                    ": tensor has bit_width " + std::to_string(packed.bit_width));
    }
    if (expected_bits == 2 && !packed.codebook) {
        throw std::invalid_argument("gemv_int2: tensor is missing its codebook");
    }
    if (static_cast<int64_t>(act.size()) != packed.cols_k) {
        throw std::invalid_argument("gemv: activation length " + std::to_string(act.size()) +
                                    " does not match cols_k = " + std::to_string(packed.cols_k));
    }
    if (packed.payload.size() != packed_payload_bytes(packed.rows_m, packed.cols_k, packed.bit_width)) {
        throw std::invalid_argument("gemv: payload size does not match shape");
    }
    if (mb_begin < 0 || mb_end > packed.rows_m / kBlockM || mb_begin > mb_end) {
        throw std::invalid_argument("gemv: row-block range out of bounds");
    }
}

void gemv_int2_blocks_scalar(const PackedWeightTensor& packed, std::span<const int8_t> act,
                             int64_t mb_begin, int64_t mb_end, int32_t* out) {
    const int64_t n_kb = packed.cols_k / packed.block_k;
    const int64_t n_kg = packed.block_k / 4;
    const auto& lut = packed.codebook->values;
    const int8_t* a0 = act.data();

    for (int64_t mb = mb_begin; mb < mb_end; ++mb) {
        int32_t acc[kBlockM] = {};
        const uint8_t* unit = packed.payload.data() + static_cast<size_t>(mb) * n_kb * n_kg * 32;
        for (int64_t kb = 0; kb < n_kb; ++kb) {
            for (int64_t kg = 0; kg < n_kg; ++kg, unit += 32) {
                const int8_t* a = a0 + kb * packed.block_k + kg * 4;
                for (int u = 0; u < 32; ++u) {
                    const uint8_t byte = unit[u];
                    const int m8 = u >> 2;
                    const int32_t av = a[u & 3];
                    acc[m8] += lut[byte & 3] * av;
                    acc[8 + m8] += lut[(byte >> 2) & 3] * av;
                    acc[16 + m8] += lut[(byte >> 4) & 3] * av;
                    acc[24 + m8] += lut[byte >> 6] * av;
                }
            }
        }
        std::memcpy(out + mb * kBlockM, acc, sizeof(acc));
    }
}

void gemv_int1_blocks_scalar(const PackedWeightTensor& packed, std::span<const int8_t> act,
                             int64_t mb_begin, int64_t mb_end, int32_t* out) {
    const int64_t n_kb = packed.cols_k / packed.block_k;
    const int64_t n_kg = packed.block_k / 4;
    const int8_t* a0 = act.data();

    for (int64_t mb = mb_begin; mb < mb_end; ++mb) {
        int32_t acc[kBlockM] = {};
        const uint8_t* unit = packed.payload.data() + static_cast<size_t>(mb) * n_kb * n_kg * 16;
        for (int64_t kb = 0; kb < n_kb; ++kb) {
            for (int64_t kg = 0; kg < n_kg; ++kg, unit += 16) {
                const int8_t* a = a0 + kb * packed.block_k + kg * 4;
                for (int g = 0; g < 4; ++g) {
                    const uint32_t word = uint32_t(unit[4 * g]) | uint32_t(unit[4 * g + 1]) << 8 |
                                          uint32_t(unit[4 * g + 2]) << 16 |
                                          uint32_t(unit[4 * g + 3]) << 24;
                    for (int idx = 0; idx < 32; ++idx) {
                        const int32_t av = a[idx & 3];
                        acc[g * 8 + (idx >> 2)] += (word >> idx) & 1 ? -av : av;
                    }
                }
            }
        }
        std::memcpy(out + mb * kBlockM, acc, sizeof(acc));
    }
}

void gemv_int8_rows_scalar(const Int8Matrix& weights, std::span<const int8_t> act,
                           int64_t row_begin, int64_t row_end, int32_t* out) {
    const int64_t K = weights.cols_k;
    for (int64_t m = row_begin; m < row_end; ++m) {
        const int8_t* row = weights.values.data() + m * K;
        int32_t acc = 0;
        for (int64_t k = 0; k < K; ++k) acc += int32_t(row[k]) * int32_t(act[k]);
        out[m] = acc;
    }
}

}  // namespace

void gemv_int2_blocks(const PackedWeightTensor& packed, std::span<const int8_t> act, Variant v,
                      int64_t mb_begin, int64_t mb_end, int32_t* out) {
    check_simd_requested(v);
    check_packed_input(packed, act, 2, mb_begin, mb_end);
#if ULB_HAVE_AVX2
    if (v == Variant::simd) {
        detail::gemv_int2_blocks_avx2(packed, act, mb_begin, mb_end, out);
        return;
    }
#endif
    gemv_int2_blocks_scalar(packed, act, mb_begin, mb_end, out);
}

void gemv_int1_blocks(const PackedWeightTensor& packed, std::span<const int8_t> act, Variant v,
                      int64_t mb_begin, int64_t mb_end, int32_t* out) {
    check_simd_requested(v);
    check_packed_input(packed, act, 1, mb_begin, mb_end);
#if ULB_HAVE_AVX2
    if (v == Variant::simd) {
        detail::gemv_int1_blocks_avx2(packed, act, mb_begin, mb_end, out);
        return;
    }
#endif
    gemv_int1_blocks_scalar(packed, act, mb_begin, mb_end, out);
}

void gemv_int8_rows(const Int8Matrix& weights, std::span<const int8_t> act, Variant v,
                    int64_t row_begin, int64_t row_end, int32_t* out) {
    check_simd_requested(v);
    if (static_cast<int64_t>(act.size()) != weights.cols_k) {
        throw std::invalid_argument("gemv_int8: activation length " + std::to_string(act.size()) +
                                    " does not match cols_k = " + std::to_string(weights.cols_k));
    }
    if (weights.values.size() != static_cast<size_t>(weights.rows_m) * weights.cols_k) {
        throw std::invalid_argument("gemv_int8: weight buffer does not match shape");
    }
    if (row_begin < 0 || row_end > weights.rows_m || row_begin > row_end) {
        throw std::invalid_argument("gemv_int8: row range out of bounds");
    }
#if ULB_HAVE_AVX2
    if (v == Variant::simd) {
        detail::gemv_int8_rows_avx2(weights, act, row_begin, row_end, out);
        return;
    }
#endif
    gemv_int8_rows_scalar(weights, act, row_begin, row_end, out);
}

AccumulatorVector gemv_int8_ref(const Int8Matrix& weights, const QuantizedVector& act, Variant v) {
    AccumulatorVector out(static_cast<size_t>(weights.rows_m));
    gemv_int8_rows(weights, act.values, v, 0, weights.rows_m, out.data());
    return out;
}

AccumulatorVector gemv_int2(const PackedWeightTensor& packed, const QuantizedVector& act, Variant v) {
    AccumulatorVector out(static_cast<size_t>(packed.rows_m));
    gemv_int2_blocks(packed, act.values, v, 0, packed.rows_m / kBlockM, out.data());
    return out;
}

AccumulatorVector gemv_int1(const PackedWeightTensor& packed, const QuantizedVector& act, Variant v) {
    AccumulatorVector out(static_cast<size_t>(packed.rows_m));
    gemv_int1_blocks(packed, act.values, v, 0, packed.rows_m / kBlockM, out.data());
    return out;
}

std::array<int8_t, 128> upconvert_block_int2(std::span<const uint8_t, 32> unit,
                                             const Codebook4& codebook) {
    // Byte positions are preserved: output group j, byte u = 4*m8 + k4 takes
    // the bit pair 2j..2j+1 of input byte u.
    std::array<int8_t, 128> out;
    for (int j = 0; j < 4; ++j) {
        for (int u = 0; u < 32; ++u) {
            out[j * 32 + u] = codebook.values[(unit[u] >> (2 * j)) & 3];
        }
    }
    return out;
}

std::array<int8_t, 32> upconvert_word_int1(uint32_t word) {
    std::array<int8_t, 32> out;
    for (int idx = 0; idx < 32; ++idx) {
        out[idx] = (word >> idx) & 1 ? int8_t{-1} : int8_t{1};
    }
    return out;
}

}  // namespace ulb
