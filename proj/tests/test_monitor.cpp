#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sls/errors.hpp"
#include "sls/monitor.hpp"
#include "sls/special_functions.hpp"
#include "sls/stats.hpp"

using namespace sls;
using test::gaussian_ar;

TEST_CASE("verdict chi2 delegates to the block pivot") {
    const auto stream = simulate_ar(gaussian_ar({0.5}, 1.0, 808), 120'000);
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 1'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 1);
    SamplerConfig cfg;
    cfg.threshold_c = 400.0;
    cfg.seed = 5;

    const auto verdicts = monitor_stream(stream, pilot, cfg, 1e-3);
    REQUIRE(verdicts.size() > 10);
    CHECK(verdicts.front().threshold ==
          doctest::Approx(chi2_quantile(pilot.order, 1.0 - 1e-3)));

    // Same sampler seed, same stream: the blocks replay exactly.
    auto blocks = collect_blocks(stream, pilot, cfg, SamplingMethod::leverage,
                                 pilot.n0 + 1);
    REQUIRE(blocks.blocks.size() == verdicts.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const auto est = block_ls(blocks.blocks[i], pilot.order);
        const double expected = pivot_chi2(est, pilot.beta0, pilot.sigma0_sq);
        CHECK(verdicts[i].chi2 ==
              doctest::Approx(expected).epsilon(1e-12));
        CHECK(verdicts[i].start == blocks.blocks[i].start);
        CHECK(verdicts[i].stop == blocks.blocks[i].stop);
        CHECK(verdicts[i].alarm == (!verdicts[i].degenerate &&
                                    verdicts[i].chi2 > verdicts[i].threshold));
    }
}

TEST_CASE("null alarm rate stays within twice the nominal size") {
    // Stream drawn from the pilot's own process: alarms are rare events.
    // The chi2 statistic treats the pilot estimates as truth, so the
    // pilot must carry much more information than one block
    // (noncentrality ~ c(1-beta^2)/n0); leverage_scale keeps the start
    // rate practical at that pilot size.
    const auto stream = simulate_ar(gaussian_ar({0.5}, 1.0, 4242), 500'000);
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 20'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 1);
    SamplerConfig cfg;
    cfg.threshold_c = 500.0;
    cfg.seed = 7;
    cfg.leverage_scale = 20.0;
    const double alpha = 0.01;
    const auto verdicts = monitor_stream(stream, pilot, cfg, alpha);
    REQUIRE(verdicts.size() >= 200);
    std::int64_t alarms = 0;
    for (const auto& v : verdicts) alarms += v.alarm ? 1 : 0;
    CHECK(static_cast<double>(alarms) <=
          2.0 * alpha * static_cast<double>(verdicts.size()));
}

TEST_CASE("null chi2 distribution passes a KS test against chi2_p") {
    const auto stream = simulate_ar(gaussian_ar({0.5}, 1.0, 515), 1'000'000);
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 20'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 1);
    SamplerConfig cfg;
    cfg.threshold_c = 600.0;
    cfg.seed = 77;
    cfg.leverage_scale = 20.0;
    const auto verdicts = monitor_stream(stream, pilot, cfg, 1e-3);
    REQUIRE(verdicts.size() >= 500);
    std::vector<double> chi2s;
    for (const auto& v : verdicts) chi2s.push_back(v.chi2);
    const auto ks = ks_test(chi2s, [&](double x) { return chi2_cdf(pilot.order, x); });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("a coefficient shift alarms on the first post-change block") {
    int alarmed_first = 0;
    const std::int64_t change_at = 30'000;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        // Continue the recursion with a new coefficient mid-stream.
        auto spec = gaussian_ar({0.3}, 1.0, 9'000 + rep);
        auto stream = simulate_ar(spec, change_at);
        CounterRng rng(derive_seed(9'000 + rep, 0x7368696674ULL));  // fresh innovations
        double prev = stream.back();
        for (std::int64_t i = 0; i < 20'000; ++i) {
            prev = 0.95 * prev + rng.gaussian();
            stream.push_back(prev);
        }

        const std::vector<double> pilot_data(stream.begin(), stream.begin() + 2'000);
        const auto pilot = build_pilot_fixed_order(pilot_data, 1);
        SamplerConfig cfg;
        cfg.threshold_c = 1'000.0;
        cfg.seed = derive_seed(rep, kSeedTagSampler);
        const auto verdicts = monitor_stream(stream, pilot, cfg, 1e-3);

        for (const auto& v : verdicts) {
            if (v.start > change_at) {
                alarmed_first += v.alarm ? 1 : 0;
                break;
            }
        }
    }
    CHECK(alarmed_first >= 95);
}

TEST_CASE("monitor verdicts are deterministic") {
    const auto stream = simulate_ar(gaussian_ar({0.5}, 1.0, 31337), 60'000);
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 1'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 1);
    SamplerConfig cfg;
    cfg.threshold_c = 300.0;
    cfg.seed = 99;
    const auto a = monitor_stream(stream, pilot, cfg, 1e-3);
    const auto b = monitor_stream(stream, pilot, cfg, 1e-3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].start == b[i].start);
        CHECK(a[i].chi2 == b[i].chi2);
        CHECK(a[i].alarm == b[i].alarm);
    }
}

TEST_CASE("degenerate blocks are reported but never alarm") {
    // A clipped-constant segment after the pilot gives rank-1 Gram rows
    // at order 2.
    auto stream = simulate_ar(gaussian_ar({0.75, -0.5}, 1.0, 2), 3'000);
    for (std::size_t i = 2'000; i < stream.size(); ++i) stream[i] = 5.0;
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 1'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 2);
    SamplerConfig cfg;
    cfg.threshold_c = 2'000.0;
    cfg.seed = 123;
    const auto verdicts = monitor_stream(stream, pilot, cfg, 1e-3);
    bool saw_degenerate = false;
    for (const auto& v : verdicts) {
        if (v.degenerate) {
            saw_degenerate = true;
            CHECK(!v.alarm);
        }
    }
    CHECK(saw_degenerate);
}

TEST_CASE("leverage trace length and zero-signal behavior") {
    const auto pilot_stream = simulate_ar(gaussian_ar({0.5}, 1.0, 61), 1'000);
    const auto pilot = build_pilot_fixed_order(pilot_stream, 1);

    const std::vector<double> zeros(500, 0.0);
    const auto trace = leverage_trace(zeros, pilot);
    REQUIRE(trace.size() == zeros.size() - 1);
    for (const auto& pt : trace) CHECK(pt.score == 0.0);
    CHECK(trace.front().position == 2);
    CHECK(trace.back().position == 500);
}

TEST_CASE("a 10x amplitude burst dominates the leverage trace") {
    auto stream = simulate_ar(gaussian_ar({0.5}, 1.0, 62), 10'000);
    for (std::size_t i = 5'000; i < 5'100; ++i) stream[i] *= 10.0;
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 1'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 1);

    const auto trace = leverage_trace(stream, pilot);
    double max_in = 0.0;
    std::vector<double> outside;
    for (const auto& pt : trace) {
        if (pt.position > 5'000 && pt.position <= 5'101) {
            max_in = std::max(max_in, pt.score);
        } else {
            outside.push_back(pt.score);
        }
    }
    CHECK(max_in >= 10.0 * median(outside));
}

TEST_CASE("monitor resident memory is bounded") {
    const auto stream = simulate_ar(gaussian_ar({0.5}, 1.0, 63), 2'000);
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 1'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 1);
    SamplerConfig cfg;
    cfg.threshold_c = 100.0;
    cfg.seed = 3;
    Monitor monitor(pilot, cfg, 1e-3);
    monitor.prime(pilot_data);
    const std::size_t baseline = monitor.resident_state_bytes();
    CounterRng rng(8);
    for (int i = 0; i < 200'000; ++i) {
        monitor.step(rng.gaussian());
    }
    CHECK(monitor.resident_state_bytes() == baseline);
}

TEST_CASE("monitor rejects bad alpha and short streams") {
    const auto stream = simulate_ar(gaussian_ar({0.5}, 1.0, 64), 1'200);
    const std::vector<double> pilot_data(stream.begin(), stream.begin() + 1'000);
    const auto pilot = build_pilot_fixed_order(pilot_data, 1);
    SamplerConfig cfg;
    cfg.threshold_c = 100.0;
    CHECK_THROWS_AS(Monitor(pilot, cfg, 0.0), ConfigError);
    CHECK_THROWS_AS(Monitor(pilot, cfg, 1.0), ConfigError);
    const std::vector<double> too_short(stream.begin(), stream.begin() + 500);
    CHECK_THROWS_AS(monitor_stream(too_short, pilot, cfg, 1e-3), DataError);
}
