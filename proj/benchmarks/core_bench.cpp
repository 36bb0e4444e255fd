#include <benchmark/benchmark.h>

#include <tfmseg/factor.hpp>
#include <tfmseg/modeid.hpp>
#include <tfmseg/segmentation.hpp>
#include <tfmseg/sim.hpp>
#include <tfmseg/stats.hpp>

using namespace tfmseg;

namespace {

SimScenario bench_scenario() {
    SimScenario sc;
    sc.scenario = Scenario::s1;
    sc.length = 400;
    sc.dims = {20, 20, 20};
    sc.ranks = {3, 3, 3};
    sc.seed = 7;
    return sc;
}

const Realisation& realisation() {
    static const Realisation r = generate(bench_scenario());
    return r;
}

const LoadingSet& loadings() {
    static const LoadingSet L =
        estimate_loadings(realisation().series, {3, 3, 3});
    return L;
}

const TensorSeries& pseudo_factors() {
    static const TensorSeries g =
        estimate_pseudo_factors(realisation().series, loadings());
    return g;
}

const PseudoFactorStats& factor_stats() {
    static const PseudoFactorStats st = pseudo_factor_stats(pseudo_factors());
    return st;
}

}  // namespace

static void BM_Generate(benchmark::State& state) {
    SimScenario sc = bench_scenario();
    for (auto _ : state) {
        sc.seed++;
        benchmark::DoNotOptimize(generate(sc));
    }
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

static void BM_ModeCovariance(benchmark::State& state) {
    const TensorSeries& s = realisation().series;
    for (auto _ : state)
        benchmark::DoNotOptimize(mode_covariance(s, 0, 0, s.length()));
}
BENCHMARK(BM_ModeCovariance)->Unit(benchmark::kMillisecond);

static void BM_EstimateLoadings(benchmark::State& state) {
    const TensorSeries& s = realisation().series;
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_loadings(s, {3, 3, 3}));
}
BENCHMARK(BM_EstimateLoadings)->Unit(benchmark::kMillisecond);

static void BM_EstimateRanks(benchmark::State& state) {
    const TensorSeries& s = realisation().series;
    for (auto _ : state) benchmark::DoNotOptimize(estimate_ranks(s));
}
BENCHMARK(BM_EstimateRanks)->Unit(benchmark::kMillisecond);

static void BM_PseudoFactors(benchmark::State& state) {
    const TensorSeries& s = realisation().series;
    const LoadingSet& L = loadings();
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_pseudo_factors(s, L));
}
BENCHMARK(BM_PseudoFactors)->Unit(benchmark::kMillisecond);

static void BM_FactorStats(benchmark::State& state) {
    const TensorSeries& g = pseudo_factors();
    for (auto _ : state) benchmark::DoNotOptimize(pseudo_factor_stats(g));
}
BENCHMARK(BM_FactorStats)->Unit(benchmark::kMillisecond);

static void BM_WeightMatrix(benchmark::State& state) {
    const PseudoFactorStats& st = factor_stats();
    for (auto _ : state) benchmark::DoNotOptimize(weight_matrix(st));
}
BENCHMARK(BM_WeightMatrix)->Unit(benchmark::kMillisecond);

static void BM_CusumScan(benchmark::State& state) {
    const PseudoFactorStats& st = factor_stats();
    const Vector w = weight_matrix(st);
    const Index T = st.length();
    for (auto _ : state) {
        double best = 0.0;
        for (Index tau = 1; tau < T; ++tau)
            best = std::max(best, detector(cusum(st, 0, tau, T), w));
        benchmark::DoNotOptimize(best);
    }
}
BENCHMARK(BM_CusumScan)->Unit(benchmark::kMillisecond);

static void BM_DetectChangePoints(benchmark::State& state) {
    const PseudoFactorStats& st = factor_stats();
    const Vector w = weight_matrix(st);
    const Index T = st.length();
    DetectorParams params{3.5, w, default_trim(T)};
    const SeededIntervalSet intervals = generate_seeded_intervals(T);
    for (auto _ : state)
        benchmark::DoNotOptimize(detect_change_points(st, intervals, params));
}
BENCHMARK(BM_DetectChangePoints)->Unit(benchmark::kMillisecond);

static void BM_DetectEndToEnd(benchmark::State& state) {
    const TensorSeries& s = realisation().series;
    DetectConfig cfg;
    cfg.ranks = {3, 3, 3};
    cfg.pi_coefficients = PiCoefficients{3.5, 0, 0, 0, 0};
    cfg.pi_source = "fixed";
    for (auto _ : state) benchmark::DoNotOptimize(detect(s, cfg));
}
BENCHMARK(BM_DetectEndToEnd)->Unit(benchmark::kMillisecond);

static void BM_IdentifyModes(benchmark::State& state) {
    const PseudoFactorStats& st = factor_stats();
    const std::vector<Index> locs = realisation().truth.locations;
    const SeededIntervalSet intervals = generate_seeded_intervals(st.length());
    const Index cells = realisation().series.cell_count();
    for (auto _ : state)
        benchmark::DoNotOptimize(identify_modes(st, locs, intervals, cells, ModeIdConfig{}));
}
BENCHMARK(BM_IdentifyModes)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
