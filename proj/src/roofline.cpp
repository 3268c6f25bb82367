// SPDX-License-Identifier: Apache-2.0
#include "ulb/roofline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ulb {

const char* bound_name(Bound b) noexcept {
    return b == Bound::bandwidth_bound ? "bandwidth_bound" : "compute_bound";
}

double cycles_per_vector(double bytes_b, double beta, double gamma) {
    if (!(bytes_b > 0.0) || !(beta > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("cycles_per_vector: inputs must be positive");
    }
    return std::max(bytes_b / beta, gamma);
}

double effective_bw(double beta, double bytes_b, double gamma) {
    if (!(bytes_b > 0.0) || !(beta > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("effective_bw: inputs must be positive");
    }
    return std::min(beta, bytes_b / gamma);
}

std::pair<double, double> platform_betas(const PlatformSpec& spec) {
    const int cores = spec.p_cores + spec.e_cores;
    if (cores < 1) throw std::invalid_argument("platform_betas: platform has no cores");
    if (!(spec.read_bw_gbs > 0.0)) {
        throw std::invalid_argument("platform_betas: read bandwidth must be positive");
    }
    const double share = spec.read_bw_gbs / cores;  // GB/s per core
    const double beta_p = spec.p_cores > 0 ? share / spec.p_freq_ghz : 0.0;
    const double beta_e = spec.e_cores > 0 ? share / spec.e_freq_ghz : 0.0;
    return {beta_p, beta_e};
}

RooflineReport modeled_aggregate_bw(const PlatformSpec& spec, const KernelProfile& profile) {
    const int cores = spec.p_cores + spec.e_cores;
    if (cores < 1) throw std::invalid_argument("modeled_aggregate_bw: platform has no cores");
    const double share = spec.read_bw_gbs / cores;

    RooflineReport r;
    r.platform = spec.name;
    r.profile = profile.name;
    std::tie(r.beta_p, r.beta_e) = platform_betas(spec);

    auto per_core = [&](double freq, double gamma, double beta, double& ebw, Bound& bound) {
        const double compute_gbs = (profile.bytes_per_vector_b / gamma) * freq;
        ebw = effective_bw(beta, profile.bytes_per_vector_b, gamma);
        bound = share <= compute_gbs ? Bound::bandwidth_bound : Bound::compute_bound;
        return std::min(share, compute_gbs);
    };
    if (spec.p_cores > 0) {
        r.per_core_gbs_p = per_core(spec.p_freq_ghz, profile.gamma_p, r.beta_p, r.ebw_p, r.bound_p);
    }
    if (spec.e_cores > 0) {
        r.per_core_gbs_e = per_core(spec.e_freq_ghz, profile.gamma_e, r.beta_e, r.ebw_e, r.bound_e);
    }
    r.aggregate_gbs = spec.p_cores * r.per_core_gbs_p + spec.e_cores * r.per_core_gbs_e;
    return r;
}

double amdahl_speedup(double alpha, double x) {
    if (std::isnan(alpha) || alpha < 0.0 || alpha > 1.0) {
        throw std::invalid_argument("amdahl_speedup: alpha must be in [0, 1]");
    }
    if (std::isnan(x) || x < 1.0) {
        throw std::invalid_argument("amdahl_speedup: x must be >= 1");
    }
    return 1.0 / (1.0 - alpha + alpha / x);
}

namespace {

const std::vector<PlatformSpec>& platform_table() {
    static const std::vector<PlatformSpec> table = {
        {"arl", 8, 16, 5.4, 4.5, 98.0, 250.0},
        {"arlh", 6, 8, 4.0, 3.6, 75.0, 115.0},
        {"lnl", 4, 4, 4.1, 3.7, 97.0, 37.0},
    };
    return table;
}

const std::vector<KernelProfile>& profile_table() {
    static const std::vector<KernelProfile> table = {
        {"int2", 8.0, 1.25, 2.175},
        {"int1", 4.0, 2.4, 4.71},
    };
    return table;
}

}  // namespace

const PlatformSpec& builtin_platform(const std::string& name) {
    for (const auto& p : platform_table()) {
        if (p.name == name) return p;
    }
    throw std::invalid_argument("unknown built-in platform '" + name + "'");
}

const KernelProfile& builtin_profile(const std::string& name) {
    for (const auto& p : profile_table()) {
        if (p.name == name) return p;
    }
    throw std::invalid_argument("unknown built-in kernel profile '" + name + "'");
}

std::vector<std::string> builtin_platform_names() {
    std::vector<std::string> names;
    for (const auto& p : platform_table()) names.push_back(p.name);
    return names;
}

std::vector<std::string> builtin_profile_names() {
    std::vector<std::string> names;
    for (const auto& p : profile_table()) names.push_back(p.name);
    return names;
}

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    nlohmann::json j;
    is >> j;
    return j;
}

void save_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open config file " + path + " for writing");
    os << j.dump(2) << '\n';
}

}  // namespace

PlatformSpec load_platform_spec(const std::string& path) {
    const auto j = load_json(path);
    PlatformSpec s;
    s.name = j.at("name").get<std::string>();
    s.p_cores = j.at("p_cores").get<int>();
    s.e_cores = j.at("e_cores").get<int>();
    s.p_freq_ghz = j.at("p_freq_ghz").get<double>();
    s.e_freq_ghz = j.at("e_freq_ghz").get<double>();
    s.read_bw_gbs = j.at("read_bw_gbs").get<double>();
    if (j.contains("max_power_w") && !j["max_power_w"].is_null()) {
        s.max_power_w = j["max_power_w"].get<double>();
    }
    if (s.p_cores + s.e_cores < 1) {
        throw std::runtime_error("platform config " + path + ": p_cores + e_cores must be >= 1");
    }
    return s;
}

KernelProfile load_kernel_profile(const std::string& path) {
    const auto j = load_json(path);
    KernelProfile p;
    p.name = j.at("name").get<std::string>();
    p.bytes_per_vector_b = j.at("bytes_per_vector_b").get<double>();
    p.gamma_p = j.at("gamma_p").get<double>();
    p.gamma_e = j.at("gamma_e").get<double>();
    if (!(p.bytes_per_vector_b > 0.0) || !(p.gamma_p > 0.0) || !(p.gamma_e > 0.0)) {
        throw std::runtime_error("kernel profile " + path + ": all values must be positive");
    }
    return p;
}

void save_platform_spec(const PlatformSpec& spec, const std::string& path) {
    nlohmann::json j{{"name", spec.name},           {"p_cores", spec.p_cores},
                     {"e_cores", spec.e_cores},     {"p_freq_ghz", spec.p_freq_ghz},
                     {"e_freq_ghz", spec.e_freq_ghz}, {"read_bw_gbs", spec.read_bw_gbs}};
    if (spec.max_power_w) j["max_power_w"] = *spec.max_power_w;
    save_json(j, path);
}

void save_kernel_profile(const KernelProfile& profile, const std::string& path) {
    save_json(nlohmann::json{{"name", profile.name},
                             {"bytes_per_vector_b", profile.bytes_per_vector_b},
                             {"gamma_p", profile.gamma_p},
                             {"gamma_e", profile.gamma_e}},
              path);
}

namespace {

bool file_exists(const std::string& path) {
    std::ifstream is(path);
    return is.good();
}

}  // namespace

PlatformSpec resolve_platform(const std::string& name_or_path) {
    for (const auto& p : platform_table()) {
        if (p.name == name_or_path) return p;
    }
    if (file_exists(name_or_path)) return load_platform_spec(name_or_path);
    throw std::invalid_argument("'" + name_or_path +
                                "' is neither a built-in platform nor a readable config file");
}

KernelProfile resolve_profile(const std::string& name_or_path) {
    for (const auto& p : profile_table()) {
        if (p.name == name_or_path) return p;
    }
    if (file_exists(name_or_path)) return load_kernel_profile(name_or_path);
    throw std::invalid_argument("'" + name_or_path +
                                "' is neither a built-in kernel profile nor a readable config file");
}

}  // namespace ulb
