// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "ulb/kernels.hpp"

namespace ulb {

struct ParallelConfig {
    int worker_count = 1;
    int64_t chunk_blocks = 1;  // 32-row blocks per task
};

/// Dynamic self-scheduling over [0, item_count): worker threads repeatedly
/// claim the next unclaimed chunk of chunk_items items from a shared atomic
/// cursor until exhausted, so faster cores naturally take more chunks.
/// body(begin, end) is invoked once per chunk; chunks never overlap and
/// cover the range exactly. Surplus workers (more than chunks) idle.
void parallel_for_chunks(int64_t item_count, int64_t chunk_items, int worker_count,
                         const std::function<void(int64_t begin, int64_t end)>& body);

/// Multi-threaded GEMV over 32-row blocks. Each output row is written by
/// exactly one task, so the result is bit-identical to the serial kernel
/// for every worker count, chunk size, and claim order.
AccumulatorVector parallel_gemv(const PackedWeightTensor& packed, const QuantizedVector& act,
                                const ParallelConfig& cfg, Variant v = preferred_variant());

/// Same dispatch over a dense int8 weight matrix (the benchmark baseline).
/// Requires rows_m to be a multiple of 32.
AccumulatorVector parallel_gemv_int8(const Int8Matrix& weights, const QuantizedVector& act,
                                     const ParallelConfig& cfg, Variant v = preferred_variant());

}  // namespace ulb
