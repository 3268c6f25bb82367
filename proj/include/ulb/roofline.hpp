// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ulb {

/// A hybrid-core CPU platform as seen by the bandwidth model.
struct PlatformSpec {
    std::string name;
    int p_cores = 0;
    int e_cores = 0;
    double p_freq_ghz = 0.0;
    double e_freq_ghz = 0.0;
    double read_bw_gbs = 0.0;             // measured platform read bandwidth
    std::optional<double> max_power_w;    // informational

    friend bool operator==(const PlatformSpec&, const PlatformSpec&) = default;
};

/// Per-kernel compute profile: bytes read per 256-bit output vector (B) and
/// cycles per output vector on P/E cores (gamma), load instructions excluded.
struct KernelProfile {
    std::string name;
    double bytes_per_vector_b = 0.0;
    double gamma_p = 0.0;
    double gamma_e = 0.0;

    friend bool operator==(const KernelProfile&, const KernelProfile&) = default;
};

enum class Bound { bandwidth_bound, compute_bound };

const char* bound_name(Bound b) noexcept;

struct RooflineReport {
    std::string platform;
    std::string profile;
    double beta_p = 0.0;            // bytes/cycle per P core
    double beta_e = 0.0;            // bytes/cycle per E core
    double ebw_p = 0.0;             // effective bandwidth, bytes/cycle
    double ebw_e = 0.0;
    double per_core_gbs_p = 0.0;
    double per_core_gbs_e = 0.0;
    double aggregate_gbs = 0.0;
    Bound bound_p = Bound::bandwidth_bound;
    Bound bound_e = Bound::bandwidth_bound;
};

/// Cycles to produce one 256-bit output vector: max(B/beta, gamma).
double cycles_per_vector(double bytes_b, double beta, double gamma);

/// Effective per-core bandwidth: min(beta, B/gamma) bytes/cycle.
double effective_bw(double beta, double bytes_b, double gamma);

/// Per-core read bandwidth in bytes/cycle assuming equal distribution of
/// the platform bandwidth: (read_bw / cores) / freq, for P and E cores.
std::pair<double, double> platform_betas(const PlatformSpec& spec);

/// Aggregate modeled bandwidth: per core type, GB/s = min(per-core share,
/// (B/gamma) * freq); summed over all cores, with bound flags per type.
RooflineReport modeled_aggregate_bw(const PlatformSpec& spec, const KernelProfile& profile);

/// End-to-end speedup when the GEMV fraction alpha of execution shrinks by
/// datatype factor x: 1 / (1 - alpha + alpha/x). Requires 0 <= alpha <= 1
/// and x >= 1 (x may be infinite).
double amdahl_speedup(double alpha, double x);

// Built-in tables (measured constants shipped as data).
const PlatformSpec& builtin_platform(const std::string& name);  // arl | arlh | lnl
const KernelProfile& builtin_profile(const std::string& name);  // int1 | int2
std::vector<std::string> builtin_platform_names();
std::vector<std::string> builtin_profile_names();

// JSON config files mirroring the struct fields.
PlatformSpec load_platform_spec(const std::string& path);
KernelProfile load_kernel_profile(const std::string& path);
void save_platform_spec(const PlatformSpec& spec, const std::string& path);
void save_kernel_profile(const KernelProfile& profile, const std::string& path);

/// Resolve a CLI-style reference: a built-in name, else a JSON file path.
PlatformSpec resolve_platform(const std::string& name_or_path);
KernelProfile resolve_profile(const std::string& name_or_path);

}  // namespace ulb
