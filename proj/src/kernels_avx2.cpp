// SPDX-License-Identifier: Apache-2.0
//
// AVX2 "up-convert and compute" GEMV kernels.
//
// 2-bit: one 256-bit load reads 128 codes in [M8][k4][m4] order; 1 shift +
// 2 ANDs + 4 in-lane byte-shuffle table lookups expand them to four int8
// vectors in [m8][k4] (VNNI4) order, one per m4 row group.
//
// 1-bit: per 32-bit word, broadcast + byte-shuffle + AND + byte-compare +
// blend expands 32 bits to +1/-1 int8 values in [m8][k4] order.
//
// The 4-wide int8 dot product is emulated with vpsignb + vpmaddubsw +
// vpmaddwd, which is exact: |weights| <= 128 and |activations| <= 127 keep
// the 16-bit intermediates below 2^15 and the row sums below 2^31.

#include <immintrin.h>

#include <cstdint>
#include <cstring>
#include <span>

#include "kernels_internal.hpp"
#include "ulb/layout.hpp"

namespace ulb::detail {

namespace {

// acc[lane] += dot(w[4*lane..4*lane+3], a[4*lane..4*lane+3]), exact s32.
inline __m256i dot4_accum(__m256i acc, __m256i w, __m256i a) {
    const __m256i w_abs = _mm256_sign_epi8(w, w);
    const __m256i a_signed = _mm256_sign_epi8(a, w);
    const __m256i p16 = _mm256_maddubs_epi16(w_abs, a_signed);
    const __m256i p32 = _mm256_madd_epi16(p16, _mm256_set1_epi16(1));
    return _mm256_add_epi32(acc, p32);
}

inline __m256i broadcast_act4(const int8_t* a) {
    int32_t v;
    std::memcpy(&v, a, 4);
    return _mm256_set1_epi32(v);
}

inline int32_t load_word(const uint8_t* p) {
    int32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

}  // namespace

void gemv_int2_blocks_avx2(const PackedWeightTensor& packed, std::span<const int8_t> act,
                           int64_t mb_begin, int64_t mb_end, int32_t* out) {
    const int64_t n_kb = packed.cols_k / packed.block_k;
    const int64_t n_kg = packed.block_k / 4;
    const auto& cb = packed.codebook->values;

    // 16-entry shuffle tables, replicated per 128-bit lane. lut01 maps the
    // low bit pair of a nibble, lut23 the high pair.
    alignas(32) int8_t lut01_bytes[32];
    alignas(32) int8_t lut23_bytes[32];
    for (int i = 0; i < 16; ++i) {
        lut01_bytes[i] = lut01_bytes[16 + i] = cb[i & 3];
        lut23_bytes[i] = lut23_bytes[16 + i] = cb[(i >> 2) & 3];
    }
    const __m256i lut01 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lut01_bytes));
    const __m256i lut23 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lut23_bytes));
    const __m256i low_nibble = _mm256_set1_epi8(0x0f);
    const int8_t* a0 = act.data();

    for (int64_t mb = mb_begin; mb < mb_end; ++mb) {
        const uint8_t* unit = packed.payload.data() + static_cast<size_t>(mb) * n_kb * n_kg * 32;
        __m256i acc0 = _mm256_setzero_si256();
        __m256i acc1 = _mm256_setzero_si256();
        __m256i acc2 = _mm256_setzero_si256();
        __m256i acc3 = _mm256_setzero_si256();
        for (int64_t kb = 0; kb < n_kb; ++kb) {
            const int8_t* a = a0 + kb * packed.block_k;
            for (int64_t kg = 0; kg < n_kg; ++kg, unit += 32, a += 4) {
                const __m256i raw = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(unit));
                const __m256i lo = _mm256_and_si256(raw, low_nibble);
                const __m256i hi = _mm256_and_si256(_mm256_srli_epi32(raw, 4), low_nibble);
                const __m256i w0 = _mm256_shuffle_epi8(lut01, lo);
                const __m256i w1 = _mm256_shuffle_epi8(lut23, lo);
                const __m256i w2 = _mm256_shuffle_epi8(lut01, hi);
                const __m256i w3 = _mm256_shuffle_epi8(lut23, hi);
                const __m256i act4 = broadcast_act4(a);
                acc0 = dot4_accum(acc0, w0, act4);
                acc1 = dot4_accum(acc1, w1, act4);
                acc2 = dot4_accum(acc2, w2, act4);
                acc3 = dot4_accum(acc3, w3, act4);
            }
        }
        int32_t* o = out + mb * kBlockM;
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o), acc0);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o + 8), acc1);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o + 16), acc2);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o + 24), acc3);
    }
}

void gemv_int1_blocks_avx2(const PackedWeightTensor& packed, std::span<const int8_t> act,
                           int64_t mb_begin, int64_t mb_end, int32_t* out) {
    const int64_t n_kb = packed.cols_k / packed.block_k;
    const int64_t n_kg = packed.block_k / 4;

    // Spread word byte i/8 to output byte i, then isolate bit i%8 per byte.
    const __m256i spread = _mm256_setr_epi8(0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1,  //
                                            2, 2, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3);
    const __m256i bit_mask = _mm256_setr_epi8(
        1, 2, 4, 8, 16, 32, 64, int8_t(128), 1, 2, 4, 8, 16, 32, 64, int8_t(128),  //
        1, 2, 4, 8, 16, 32, 64, int8_t(128), 1, 2, 4, 8, 16, 32, 64, int8_t(128));
    const __m256i plus_one = _mm256_set1_epi8(1);
    const __m256i minus_one = _mm256_set1_epi8(-1);
    const int8_t* a0 = act.data();

    for (int64_t mb = mb_begin; mb < mb_end; ++mb) {
        const uint8_t* unit = packed.payload.data() + static_cast<size_t>(mb) * n_kb * n_kg * 16;
        __m256i acc0 = _mm256_setzero_si256();
        __m256i acc1 = _mm256_setzero_si256();
        __m256i acc2 = _mm256_setzero_si256();
        __m256i acc3 = _mm256_setzero_si256();
        for (int64_t kb = 0; kb < n_kb; ++kb) {
            const int8_t* a = a0 + kb * packed.block_k;
            for (int64_t kg = 0; kg < n_kg; ++kg, unit += 16, a += 4) {
                const __m256i act4 = broadcast_act4(a);
                auto upconvert = [&](int g) {
                    __m256i t = _mm256_set1_epi32(load_word(unit + 4 * g));
                    t = _mm256_shuffle_epi8(t, spread);
                    t = _mm256_and_si256(t, bit_mask);
                    const __m256i is_one = _mm256_cmpeq_epi8(t, bit_mask);
                    return _mm256_blendv_epi8(plus_one, minus_one, is_one);
                };
                acc0 = dot4_accum(acc0, upconvert(0), act4);
                acc1 = dot4_accum(acc1, upconvert(1), act4);
                acc2 = dot4_accum(acc2, upconvert(2), act4);
                acc3 = dot4_accum(acc3, upconvert(3), act4);
            }
        }
        int32_t* o = out + mb * kBlockM;
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o), acc0);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o + 8), acc1);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o + 16), acc2);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(o + 24), acc3);
    }
}

void gemv_int8_rows_avx2(const Int8Matrix& weights, std::span<const int8_t> act,
                         int64_t row_begin, int64_t row_end, int32_t* out) {
    const int64_t K = weights.cols_k;
    const int64_t k_main = K - K % 32;
    const int8_t* a0 = act.data();

    for (int64_t m = row_begin; m < row_end; ++m) {
        const int8_t* row = weights.values.data() + m * K;
        __m256i acc = _mm256_setzero_si256();
        for (int64_t k = 0; k < k_main; k += 32) {
            const __m256i w = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + k));
            const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a0 + k));
            acc = dot4_accum(acc, w, a);
        }
        const __m128i lo = _mm256_castsi256_si128(acc);
        const __m128i hi = _mm256_extracti128_si256(acc, 1);
        __m128i sum = _mm_add_epi32(lo, hi);
        sum = _mm_add_epi32(sum, _mm_shuffle_epi32(sum, 0x4e));
        sum = _mm_add_epi32(sum, _mm_shuffle_epi32(sum, 0xb1));
        int32_t total = _mm_cvtsi128_si32(sum);
        for (int64_t k = k_main; k < K; ++k) total += int32_t(row[k]) * int32_t(a0[k]);
        out[m] = total;
    }
}

}  // namespace ulb::detail
