// SPDX-License-Identifier: Apache-2.0
#include "ulb/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ulb {

void parallel_for_chunks(int64_t item_count, int64_t chunk_items, int worker_count,
                         const std::function<void(int64_t begin, int64_t end)>& body) {
    if (worker_count < 1) throw std::invalid_argument("parallel: worker_count must be >= 1");
    if (chunk_items < 1) throw std::invalid_argument("parallel: chunk_items must be >= 1");
    if (item_count <= 0) return;

    const int64_t n_chunks = (item_count + chunk_items - 1) / chunk_items;
    std::atomic<int64_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const int64_t c = cursor.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks) return;
            const int64_t begin = c * chunk_items;
            const int64_t end = std::min(item_count, begin + chunk_items);
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(worker_count) - 1);
    for (int i = 1; i < worker_count; ++i) pool.emplace_back(worker);
    worker();  // calling thread participates
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

AccumulatorVector parallel_gemv(const PackedWeightTensor& packed, const QuantizedVector& act,
                                const ParallelConfig& cfg, Variant v) {
    AccumulatorVector out(static_cast<size_t>(packed.rows_m));
    const int64_t n_blocks = packed.rows_m / kBlockM;
    if (packed.bit_width == 2) {
        parallel_for_chunks(n_blocks, cfg.chunk_blocks, cfg.worker_count,
                            [&](int64_t b0, int64_t b1) {
                                gemv_int2_blocks(packed, act.values, v, b0, b1, out.data());
                            });
    } else {
        parallel_for_chunks(n_blocks, cfg.chunk_blocks, cfg.worker_count,
                            [&](int64_t b0, int64_t b1) {
                                gemv_int1_blocks(packed, act.values, v, b0, b1, out.data());
                            });
    }
    return out;
}

AccumulatorVector parallel_gemv_int8(const Int8Matrix& weights, const QuantizedVector& act,
                                     const ParallelConfig& cfg, Variant v) {
    if (weights.rows_m % kBlockM != 0) {
        throw std::invalid_argument("parallel_gemv_int8: rows_m must be a multiple of 32");
    }
    AccumulatorVector out(static_cast<size_t>(weights.rows_m));
    parallel_for_chunks(weights.rows_m / kBlockM, cfg.chunk_blocks, cfg.worker_count,
                        [&](int64_t b0, int64_t b1) {
                            gemv_int8_rows(weights, act.values, v, b0 * kBlockM, b1 * kBlockM,
                                           out.data());
                        });
    return out;
}

}  // namespace ulb
