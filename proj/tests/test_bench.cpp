// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ulb/bench.hpp"

using namespace ulb;
using doctest::Approx;

namespace {
bool within(double value, double expected, double margin) {
    return std::abs(value - expected) <= margin;
}
}  // namespace

TEST_SUITE("bench") {

TEST_CASE("bandwidth accounting constants") {
    CHECK(weight_payload_bytes(1600, 1600, 2) == 640000);
    CHECK(weight_payload_bytes(1600, 1600, 8) == 4 * weight_payload_bytes(1600, 1600, 2));
    // ideal int2 1600x1600 time at 98 GB/s
    const double us = ideal_seconds(1600, 1600, 2, 98.0) * 1e6;
    CHECK(within(us, 6.53, 0.005));
    CHECK(within(us, 6.0, 1.0));  // the published rounded figure
}

TEST_CASE("run_gemv_bench smoke run reports consistent bandwidth") {
    ShapeSuite suite{"smoke", {{64, 64}, {32, 8}}, ""};
    BenchOptions opt;
    opt.iterations = 5;
    opt.warmup = 1;
    opt.variant = Variant::scalar;
    opt.parallel = {2, 1};

    for (int bits : {1, 2, 8}) {
        const auto results = run_gemv_bench(suite, bits, opt);
        REQUIRE(results.size() == 2);
        for (const auto& r : results) {
            CHECK(r.bits == bits);
            CHECK(r.iterations == 5);
            CHECK(r.workers == 2);
            CHECK(r.median_seconds > 0.0);
            const double expect =
                double(weight_payload_bytes(r.shape_m, r.shape_k, bits)) / r.median_seconds / 1e9;
            CHECK(r.attained_gbs == Approx(expect).epsilon(1e-9));
            CHECK_FALSE(r.predicted_gbs.has_value());
        }
    }
    CHECK_THROWS_AS(run_gemv_bench(suite, 2, BenchOptions{.iterations = 2}), std::invalid_argument);
}

TEST_CASE("predictions attach the aggregate model") {
    ShapeSuite suite{"smoke", {{64, 64}}, ""};
    BenchOptions opt;
    opt.iterations = 3;
    opt.warmup = 0;
    opt.variant = Variant::scalar;

    auto results = run_gemv_bench(suite, 2, opt);
    attach_predictions(results, builtin_platform("arl"));
    REQUIRE(results[0].predicted_gbs.has_value());
    CHECK(*results[0].predicted_gbs == Approx(98.0).epsilon(1e-9));

    auto results1 = run_gemv_bench(suite, 1, opt);
    attach_predictions(results1, builtin_platform("lnl"));
    CHECK(within(*results1[0].predicted_gbs, 39.9, 0.1));

    auto results8 = run_gemv_bench(suite, 8, opt);
    CHECK_THROWS_AS(attach_predictions(results8, builtin_platform("arl")), std::invalid_argument);
}

TEST_CASE("CSV report has the exact column set") {
    BenchResult r;
    r.suite = "smoke";
    r.shape_m = 64;
    r.shape_k = 32;
    r.bits = 2;
    r.variant = Variant::scalar;
    r.workers = 4;
    r.iterations = 3;
    r.median_seconds = 12.5e-6;
    r.attained_gbs = 1.5;

    std::ostringstream os;
    report_csv(std::vector<BenchResult>{r}, os);
    std::istringstream lines(os.str());
    std::string header, row, extra;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(header ==
          "suite,shape_m,shape_k,bits,variant,workers,iters,median_us,attained_gbs,predicted_gbs");
    CHECK(row == "smoke,64,32,2,scalar,4,3,12.5,1.5,");  // trailing cell empty without prediction

    r.predicted_gbs = 98.0;
    std::ostringstream os2;
    report_csv(std::vector<BenchResult>{r}, os2);
    CHECK(os2.str().find(",98\n") != std::string::npos);

    CHECK_THROWS_AS(report_csv(std::vector<BenchResult>{}, os), std::invalid_argument);
}

TEST_CASE("JSON report round trip recovers identical values") {
    BenchResult r;
    r.suite = "smoke";
    r.shape_m = 1600;
    r.shape_k = 1600;
    r.bits = 1;
    r.variant = Variant::simd;
    r.workers = 14;
    r.iterations = 100;
    r.median_seconds = 17.25e-6;
    r.attained_gbs = 18.55;
    r.predicted_gbs = 55.0;

    std::stringstream ss;
    report_json(std::vector<BenchResult>{r}, 1234, ss);
    uint64_t seed = 0;
    const auto back = parse_report_json(ss, &seed);
    CHECK(seed == 1234);
    REQUIRE(back.size() == 1);
    CHECK(back[0].suite == r.suite);
    CHECK(back[0].shape_m == r.shape_m);
    CHECK(back[0].shape_k == r.shape_k);
    CHECK(back[0].bits == r.bits);
    CHECK(back[0].variant == r.variant);
    CHECK(back[0].workers == r.workers);
    CHECK(back[0].iterations == r.iterations);
    CHECK(back[0].median_seconds == Approx(r.median_seconds).epsilon(1e-12));
    CHECK(back[0].attained_gbs == r.attained_gbs);
    CHECK(back[0].predicted_gbs == r.predicted_gbs);
}

TEST_CASE("suite files round trip and shipped suites match the builtins") {
    for (const auto& name : builtin_suite_names()) {
        const ShapeSuite& suite = builtin_suite(name);
        const std::string path = "test_suite_" + name + ".json";
        save_suite(suite, path);
        CHECK(load_suite(path) == suite);
        std::remove(path.c_str());
#ifdef ULB_TEST_SOURCE_DIR
        CHECK(load_suite(std::string(ULB_TEST_SOURCE_DIR) + "/suites/" + name + ".json") == suite);
#endif
    }
    CHECK(builtin_suite("mobilellm-1.5b").shapes.front() == std::pair<int64_t, int64_t>{1600, 1600});
    CHECK_THROWS_AS(builtin_suite("nope"), std::invalid_argument);
}

TEST_CASE("calibrate_gamma returns positive throughput estimates") {
    const auto est = calibrate_gamma(2, Variant::scalar, 3.0);
    CHECK(est.ns_per_vector > 0.0);
    CHECK(est.cycles_per_vector == Approx(est.ns_per_vector * 3.0));
    CHECK_THROWS_AS(calibrate_gamma(8, Variant::scalar), std::invalid_argument);
}

}  // TEST_SUITE
