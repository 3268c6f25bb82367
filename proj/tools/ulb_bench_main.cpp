// SPDX-License-Identifier: Apache-2.0
//
// ulb-bench: GEMV micro-benchmarks, roofline reports, Amdahl projections,
// host gamma calibration, and offline weight packing.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ulb/bench.hpp"
#include "ulb/layout.hpp"
#include "ulb/quant.hpp"
#include "ulb/roofline.hpp"

namespace {

ulb::Variant resolve_variant(const std::string& flag) {
    if (flag.empty()) return ulb::preferred_variant();
    const ulb::Variant v = ulb::parse_variant(flag);
    if (v == ulb::Variant::simd && !ulb::simd_available()) {
        throw CLI::ValidationError("--variant", "simd variant is not available on this host");
    }
    return v;
}

void print_roofline(const ulb::RooflineReport& r, std::ostream& os) {
    char buf[256];
    os << "platform:        " << r.platform << "\n";
    os << "profile:         " << r.profile << "\n";
    std::snprintf(buf, sizeof(buf), "beta (P/E):      %.3f / %.3f bytes/cycle\n", r.beta_p, r.beta_e);
    os << buf;
    std::snprintf(buf, sizeof(buf), "e_bw (P/E):      %.3f / %.3f bytes/cycle\n", r.ebw_p, r.ebw_e);
    os << buf;
    std::snprintf(buf, sizeof(buf), "per-core (P/E):  %.3f / %.3f GB/s\n", r.per_core_gbs_p,
                  r.per_core_gbs_e);
    os << buf;
    std::snprintf(buf, sizeof(buf), "aggregate:       %.2f GB/s\n", r.aggregate_gbs);
    os << buf;
    os << "bound (P/E):     " << ulb::bound_name(r.bound_p) << " / " << ulb::bound_name(r.bound_e)
       << "\n";
}

int run_gemv_command(const std::string& suite_flag, int64_t m, int64_t k, int bits, int threads,
                     int64_t chunk_blocks, int iters, int warmup, uint64_t seed,
                     const std::string& variant_flag, bool predict, const std::string& platform_flag,
                     const std::string& format, const std::string& out_path) {
    ulb::ShapeSuite suite;
    if (!suite_flag.empty()) {
        suite = ulb::resolve_suite(suite_flag);
    } else {
        suite.name = "custom";
        suite.shapes.emplace_back(m, k);
    }

    ulb::BenchOptions opt;
    opt.iterations = iters;
    opt.warmup = warmup;
    opt.seed = seed;
    opt.variant = resolve_variant(variant_flag);
    opt.parallel.worker_count = threads > 0 ? threads : int(std::thread::hardware_concurrency());
    if (opt.parallel.worker_count < 1) opt.parallel.worker_count = 1;
    opt.parallel.chunk_blocks = chunk_blocks;

    std::cerr << "ulb-bench gemv: suite=" << suite.name << " bits=" << bits
              << " variant=" << ulb::variant_name(opt.variant)
              << " threads=" << opt.parallel.worker_count << " chunk_blocks=" << opt.parallel.chunk_blocks
              << " iters=" << opt.iterations << " warmup=" << opt.warmup << " seed=" << opt.seed
              << "\n";

    std::vector<ulb::BenchResult> results = ulb::run_gemv_bench(suite, bits, opt);
    if (predict) {
        const ulb::PlatformSpec platform = ulb::resolve_platform(platform_flag);
        ulb::attach_predictions(results, platform);
    }

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot open output file " + out_path);
        os = &file;
    }
    if (format == "json") {
        ulb::report_json(results, seed, *os);
    } else {
        ulb::report_csv(results, *os);
    }
    return 0;
}

int run_pack_command(const std::string& in_path, const std::string& out_path, int bits, int64_t m,
                     int64_t k, int64_t block_k, const std::string& codebook_flag,
                     const std::string& scales_path) {
    std::ifstream is(in_path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open codes file " + in_path);
    ulb::DenseCodeMatrix codes;
    codes.rows_m = m;
    codes.cols_k = k;
    codes.codes.resize(static_cast<size_t>(m) * k);
    is.read(reinterpret_cast<char*>(codes.codes.data()),
            static_cast<std::streamsize>(codes.codes.size()));
    if (static_cast<size_t>(is.gcount()) != codes.codes.size()) {
        throw std::runtime_error("codes file " + in_path + " holds fewer than " +
                                 std::to_string(codes.codes.size()) + " bytes (one byte per code)");
    }

    std::optional<std::vector<float>> scales;
    if (!scales_path.empty()) {
        std::ifstream ss(scales_path, std::ios::binary);
        if (!ss) throw std::runtime_error("cannot open scales file " + scales_path);
        std::vector<float> values(static_cast<size_t>(m));
        ss.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(float)));
        if (static_cast<size_t>(ss.gcount()) != values.size() * sizeof(float)) {
            throw std::runtime_error("scales file " + scales_path + " holds fewer than " +
                                     std::to_string(m) + " float32 values");
        }
        scales = std::move(values);
    }

    ulb::PackedWeightTensor packed;
    if (bits == 2) {
        ulb::Codebook4 cb;
        if (!codebook_flag.empty()) {
            std::istringstream cs(codebook_flag);
            std::string tok;
            for (int i = 0; i < 4; ++i) {
                if (!std::getline(cs, tok, ',')) {
                    throw std::runtime_error("--codebook needs 4 comma-separated int8 values");
                }
                const int v = std::stoi(tok);
                if (v < -128 || v > 127) throw std::runtime_error("codebook value out of int8 range");
                cb.values[i] = static_cast<int8_t>(v);
            }
        }
        packed = ulb::pack_int2(codes, block_k, cb, std::move(scales));
    } else {
        packed = ulb::pack_int1(codes, block_k, std::move(scales));
    }
    ulb::write_packed_file(packed, out_path);
    std::cerr << "packed " << m << "x" << k << " int" << bits << " -> " << out_path << " ("
              << packed.payload.size() << " payload bytes, block_k=" << packed.block_k << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ultra-low-bit GEMV benchmark harness"};
    app.require_subcommand(1);

    // gemv
    auto* gemv = app.add_subcommand("gemv", "time GEMV kernels and report attained bandwidth");
    int bits = 2;
    std::string suite_flag;
    int64_t m = 0, k = 0;
    int threads = 0;
    int64_t chunk_blocks = 1;
    int iters = 100, warmup = 10;
    uint64_t seed = 42;
    std::string variant_flag, platform_flag = "arl", format = "csv", out_path;
    bool predict = false;
    gemv->add_option("--bits", bits, "weight bit width")->check(CLI::IsMember({1, 2, 8}))->required();
    auto* suite_opt = gemv->add_option("--suite", suite_flag, "built-in suite name or suite JSON path");
    auto* m_opt = gemv->add_option("--m", m, "rows of a single custom shape");
    auto* k_opt = gemv->add_option("--k", k, "columns of a single custom shape");
    suite_opt->excludes(m_opt)->excludes(k_opt);
    m_opt->needs(k_opt);
    k_opt->needs(m_opt);
    gemv->add_option("--threads", threads, "worker threads (default: hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
    gemv->add_option("--chunk-blocks", chunk_blocks, "32-row blocks per scheduling chunk")
        ->check(CLI::PositiveNumber);
    gemv->add_option("--iters", iters, "timed iterations (median reported)")
        ->check(CLI::Range(3, 1 << 24));
    gemv->add_option("--warmup", warmup, "warmup iterations")->check(CLI::NonNegativeNumber);
    gemv->add_option("--seed", seed, "RNG seed for weights/activations");
    gemv->add_option("--variant", variant_flag, "kernel variant (default: simd when available)")
        ->check(CLI::IsMember({"scalar", "simd"}));
    gemv->add_flag("--predict", predict, "attach roofline model predictions");
    gemv->add_option("--platform", platform_flag, "platform for --predict: arl|arlh|lnl|FILE");
    gemv->add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
    gemv->add_option("--out", out_path, "output path (default: stdout)");

    // roofline
    auto* roofline = app.add_subcommand("roofline", "print the roofline report for a platform/profile");
    std::string rl_platform, rl_profile;
    roofline->add_option("--platform", rl_platform, "arl|arlh|lnl or platform JSON path")->required();
    roofline->add_option("--profile", rl_profile, "int1|int2 or profile JSON path")->required();

    // amdahl
    auto* amdahl = app.add_subcommand("amdahl", "end-to-end speedup bound for a GEMV fraction");
    double alpha = 0.0, x_factor = 1.0;
    amdahl->add_option("--alpha", alpha, "fraction of time spent in GEMVs")->required();
    amdahl->add_option("--x", x_factor, "datatype shrink factor")->required();

    // calibrate-gamma
    auto* calibrate = app.add_subcommand("calibrate-gamma",
                                         "estimate cycles per output vector on this host");
    double freq_ghz = 0.0;
    std::string cal_variant;
    calibrate->add_option("--freq-ghz", freq_ghz, "core frequency used to convert ns to cycles");
    calibrate->add_option("--variant", cal_variant, "kernel variant to measure")
        ->check(CLI::IsMember({"scalar", "simd"}));

    // pack
    auto* pack = app.add_subcommand("pack", "pack a raw code matrix into a .ulbw file");
    std::string pack_in, pack_out, codebook_flag, scales_path;
    int pack_bits = 2;
    int64_t pack_m = 0, pack_k = 0, pack_block_k = 0;
    pack->add_option("--in", pack_in, "raw codes file, one byte per code, row-major")->required();
    pack->add_option("--bits", pack_bits, "weight bit width")->check(CLI::IsMember({1, 2}))->required();
    pack->add_option("--out", pack_out, "output .ulbw path")->required();
    pack->add_option("--m", pack_m, "rows")->required()->check(CLI::PositiveNumber);
    pack->add_option("--k", pack_k, "columns")->required()->check(CLI::PositiveNumber);
    pack->add_option("--block-k", pack_block_k, "contraction blocking factor (default: derived)");
    pack->add_option("--codebook", codebook_flag, "2-bit code values, e.g. \"-2,-1,0,1\"");
    pack->add_option("--scales", scales_path, "per-row float32 scales file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gemv->parsed()) {
            if (suite_flag.empty() && (m == 0 || k == 0)) {
                throw CLI::ValidationError("gemv", "either --suite or --m/--k is required");
            }
            return run_gemv_command(suite_flag, m, k, bits, threads, chunk_blocks, iters, warmup,
                                    seed, variant_flag, predict, platform_flag, format, out_path);
        }
        if (roofline->parsed()) {
            const ulb::PlatformSpec platform = ulb::resolve_platform(rl_platform);
            const ulb::KernelProfile profile = ulb::resolve_profile(rl_profile);
            print_roofline(ulb::modeled_aggregate_bw(platform, profile), std::cout);
            return 0;
        }
        if (amdahl->parsed()) {
            const double s = ulb::amdahl_speedup(alpha, x_factor);
            std::printf("alpha=%.4f x=%.2f -> speedup %.4fx\n", alpha, x_factor, s);
            return 0;
        }
        if (calibrate->parsed()) {
            const ulb::Variant v =
                cal_variant.empty() ? ulb::preferred_variant() : ulb::parse_variant(cal_variant);
            if (v == ulb::Variant::simd && !ulb::simd_available()) {
                throw std::runtime_error("simd variant is not available on this host");
            }
            for (int cal_bits : {2, 1}) {
                const ulb::GammaEstimate est = ulb::calibrate_gamma(cal_bits, v, freq_ghz);
                std::printf("int%d %s: %.3f ns/vector", est.bits, ulb::variant_name(est.variant),
                            est.ns_per_vector);
                if (est.cycles_per_vector > 0.0) {
                    std::printf(", gamma ~ %.3f cycles/vector @ %.2f GHz", est.cycles_per_vector,
                                freq_ghz);
                }
                std::printf("\n");
            }
            return 0;
        }
        if (pack->parsed()) {
            return run_pack_command(pack_in, pack_out, pack_bits, pack_m, pack_k, pack_block_k,
                                    codebook_flag, scales_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
