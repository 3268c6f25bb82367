// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ulb {

/// int8 activation vector with a single symmetric scale.
/// Values stay in [-127, 127]; -128 is never produced.
struct QuantizedVector {
    std::vector<int8_t> values;
    float scale = 1.0f;
};

/// Signed 32-bit GEMV accumulators, one per output row.
using AccumulatorVector = std::vector<int32_t>;

/// Symmetric per-tensor int8 quantization: scale = max|x| / 127 (1 when all
/// inputs are zero), values = clamp(round_half_away_from_zero(x / scale),
/// -127, 127). Throws std::invalid_argument on non-finite input.
QuantizedVector quantize_activations(std::span<const float> x);

/// out[m] = acc[m] * act_scale * (row_scales[m] if present else 1).
std::vector<float> dequantize_output(const AccumulatorVector& acc, float act_scale,
                                     const std::optional<std::vector<float>>& row_scales = std::nullopt);

}  // namespace ulb
