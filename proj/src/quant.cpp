// SPDX-License-Identifier: Apache-2.0
#include "ulb/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ulb {

QuantizedVector quantize_activations(std::span<const float> x) {
    float amax = 0.0f;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw std::invalid_argument("quantize_activations: non-finite input at index " +
                                        std::to_string(i));
        }
        amax = std::max(amax, std::fabs(x[i]));
    }

    QuantizedVector q;
    q.scale = amax > 0.0f ? amax / 127.0f : 1.0f;
    q.values.resize(x.size());
    const float inv = 1.0f / q.scale;
    for (size_t i = 0; i < x.size(); ++i) {
        // std::round rounds halves away from zero.
        const float r = std::round(x[i] * inv);
        q.values[i] = static_cast<int8_t>(std::clamp(r, -127.0f, 127.0f));
    }
    return q;
}

std::vector<float> dequantize_output(const AccumulatorVector& acc, float act_scale,
                                     const std::optional<std::vector<float>>& row_scales) {
    if (row_scales && row_scales->size() != acc.size()) {
        throw std::invalid_argument("dequantize_output: row_scales has " +
                                    std::to_string(row_scales->size()) + " entries, expected " +
                                    std::to_string(acc.size()));
    }
    std::vector<float> out(acc.size());
    for (size_t m = 0; m < acc.size(); ++m) {
        out[m] = static_cast<float>(acc[m]) * act_scale * (row_scales ? (*row_scales)[m] : 1.0f);
    }
    return out;
}

}  // namespace ulb
