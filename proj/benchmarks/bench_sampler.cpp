#include <benchmark/benchmark.h>

#include "sls/estimation.hpp"
#include "sls/pilot.hpp"
#include "sls/rng.hpp"
#include "sls/sampler.hpp"
#include "sls/series.hpp"

namespace {

sls::PilotModel pilot_of_order(int p) {
    sls::PilotModel m;
    m.order = p;
    m.precision = 1e-4 * Eigen::MatrixXd::Identity(p, p);
    m.beta0 = Eigen::VectorXd::Zero(p);
    m.sigma0_sq = 1.0;
    m.n0 = 1'000;
    return m;
}

std::vector<double> noise(std::size_t n) {
    sls::CounterRng rng(42);
    std::vector<double> out(n);
    for (double& x : out) x = rng.gaussian();
    return out;
}

void SamplerStep(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const auto pilot = pilot_of_order(p);
    sls::SamplerConfig cfg;
    cfg.threshold_c = 1e4;
    cfg.seed = 1;
    sls::SequentialSampler sampler(pilot, cfg);
    const auto stream = noise(1 << 16);
    std::size_t i = 0;
    for (auto _ : state) {
        auto ev = sampler.step(stream[i++ & 0xffff]);
        benchmark::DoNotOptimize(ev.leverage_score);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(SamplerStep)->Arg(1)->Arg(4)->Arg(14);

void StreamingLeverage(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const Eigen::MatrixXd omega = 1e-3 * Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd z = Eigen::VectorXd::Constant(p, 0.7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sls::streaming_leverage(z, omega));
    }
}
BENCHMARK(StreamingLeverage)->Arg(1)->Arg(4)->Arg(14)->Arg(32);

void BlockLeastSquares(benchmark::State& state) {
    const int p = 4;
    const auto len = state.range(0);
    sls::SlsBlock block;
    block.start = p + 1;
    block.stop = p + len;
    block.values = noise(static_cast<std::size_t>(len + p));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sls::block_ls(block, p));
    }
    state.SetComplexityN(len);
}
BENCHMARK(BlockLeastSquares)->Range(64, 1 << 14)->Complexity(benchmark::oN);

void SimulateAr(benchmark::State& state) {
    sls::ArProcessSpec spec;
    spec.coeffs = Eigen::VectorXd::Constant(1, 0.5);
    spec.innovation = sls::GaussianInnovation{1.0};
    spec.burn_in = 0;
    spec.seed = 3;
    sls::ArStreamGenerator gen(spec);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gen.next());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(SimulateAr);

void PilotBuild(benchmark::State& state) {
    sls::ArProcessSpec spec;
    spec.coeffs = Eigen::VectorXd::Constant(1, 0.5);
    spec.innovation = sls::GaussianInnovation{1.0};
    spec.burn_in = 500;
    spec.seed = 9;
    const auto pilot = sls::simulate_ar(spec, state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sls::build_pilot(pilot, 6));
    }
}
BENCHMARK(PilotBuild)->Arg(200)->Arg(2'000)->Arg(24'000);

}  // namespace

BENCHMARK_MAIN();
