// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "ulb/layout.hpp"

namespace ulb::detail {

#if ULB_HAVE_AVX2
void gemv_int2_blocks_avx2(const PackedWeightTensor& packed, std::span<const int8_t> act,
                           int64_t mb_begin, int64_t mb_end, int32_t* out);
void gemv_int1_blocks_avx2(const PackedWeightTensor& packed, std::span<const int8_t> act,
                           int64_t mb_begin, int64_t mb_end, int32_t* out);
void gemv_int8_rows_avx2(const Int8Matrix& weights, std::span<const int8_t> act,
                         int64_t row_begin, int64_t row_end, int32_t* out);
#endif

}  // namespace ulb::detail
