// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ulb/kernels.hpp"
#include "ulb/parallel.hpp"
#include "ulb/roofline.hpp"

namespace ulb {

/// Named list of GEMV weight shapes (M, K).
struct ShapeSuite {
    std::string name;
    std::vector<std::pair<int64_t, int64_t>> shapes;
    std::string notes;

    friend bool operator==(const ShapeSuite&, const ShapeSuite&) = default;
};

/// One timed GEMV configuration.
struct BenchResult {
    std::string suite;
    int64_t shape_m = 0;
    int64_t shape_k = 0;
    int bits = 0;  // 1, 2 or 8
    Variant variant = Variant::scalar;
    int workers = 1;
    int iterations = 0;
    double median_seconds = 0.0;
    double attained_gbs = 0.0;  // weight payload bytes / median_seconds / 1e9
    std::optional<double> predicted_gbs;
};

struct BenchOptions {
    int iterations = 100;
    int warmup = 10;
    uint64_t seed = 42;
    Variant variant = preferred_variant();
    ParallelConfig parallel{};
};

/// Raised when the pre-timing correctness gate fails; a benchmark binary
/// can never report numbers from an incorrect kernel.
class OracleMismatch : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Weight bytes moved per GEMV: M * K * bits / 8.
size_t weight_payload_bytes(int64_t m, int64_t k, int bits);

/// Lower bound on GEMV wall time at the given read bandwidth.
double ideal_seconds(int64_t m, int64_t k, int bits, double read_bw_gbs);

/// For each suite shape: build seeded random weights and activations, check
/// one parallel result against the scalar decode+int8 oracle, then time
/// `iterations` runs after `warmup` and report the median.
std::vector<BenchResult> run_gemv_bench(const ShapeSuite& suite, int bits,
                                        const BenchOptions& opt);

/// Attach the aggregate roofline prediction of the matching built-in kernel
/// profile (int1/int2) to every result. Throws for bit widths without a
/// profile.
void attach_predictions(std::vector<BenchResult>& results, const PlatformSpec& platform);

/// CSV with exactly these columns:
/// suite,shape_m,shape_k,bits,variant,workers,iters,median_us,attained_gbs,predicted_gbs
void report_csv(std::span<const BenchResult> results, std::ostream& out);

/// JSON object {"seed": ..., "results": [...]} where each result mirrors
/// the CSV field names.
void report_json(std::span<const BenchResult> results, uint64_t seed, std::ostream& out);

std::vector<BenchResult> parse_report_json(std::istream& in, uint64_t* seed_out = nullptr);

// Built-in shape suites (also shipped as editable JSON files under suites/).
const ShapeSuite& builtin_suite(const std::string& name);
std::vector<std::string> builtin_suite_names();

ShapeSuite load_suite(const std::string& path);
void save_suite(const ShapeSuite& suite, const std::string& path);

/// A built-in suite name, else a suite JSON file path.
ShapeSuite resolve_suite(const std::string& name_or_path);

/// Host gamma estimate: time the up-convert + FMA sequence on a cache
/// resident packed block and report nanoseconds per 256-bit output vector.
/// With freq_ghz > 0 the result is also expressed in cycles (gamma).
struct GammaEstimate {
    int bits = 0;
    Variant variant = Variant::scalar;
    double ns_per_vector = 0.0;
    double cycles_per_vector = 0.0;  // 0 when freq_ghz unknown
};
GammaEstimate calibrate_gamma(int bits, Variant v, double freq_ghz = 0.0);

}  // namespace ulb
