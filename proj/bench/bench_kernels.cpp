// Parallel kernels vs. the serial reference implementations.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dadp/diffusion.hpp"
#include "dadp/losses.hpp"
#include "dadp/metrics.hpp"
#include "dadp/ref.hpp"
#include "dadp/schedule.hpp"

namespace {

const dadp::NoiseSchedule& sched() {
    static const dadp::NoiseSchedule s = dadp::build_schedule(1000, 1e-4, 0.02);
    return s;
}

std::vector<double> random_vec(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<double> v(n);
    for (auto& x : v) x = gauss(rng);
    return v;
}

dadp::DepthMap random_map(int side, uint64_t seed, double offset) {
    dadp::DepthMap d(side, side);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    for (auto& v : d.values) v = offset + gauss(rng);
    return d;
}

void bm_q_sample_parallel(benchmark::State& state) {
    const size_t n = size_t(state.range(0));
    const auto x0 = random_vec(n, 1), eps = random_vec(n, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        dadp::q_sample(x0, 500, eps, sched(), out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n));
}

void bm_q_sample_serial(benchmark::State& state) {
    const size_t n = size_t(state.range(0));
    const auto x0 = random_vec(n, 1), eps = random_vec(n, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        dadp::ref::q_sample(x0, 500, eps, sched(), out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n));
}

void bm_noise_mse_parallel(benchmark::State& state) {
    const size_t n = size_t(state.range(0));
    const auto a = random_vec(n, 3), b = random_vec(n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(dadp::noise_mse(a, b));
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n));
}

void bm_noise_mse_serial(benchmark::State& state) {
    const size_t n = size_t(state.range(0));
    const auto a = random_vec(n, 3), b = random_vec(n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(dadp::ref::noise_mse(a, b));
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n));
}

void bm_metrics_parallel(benchmark::State& state) {
    const int side = int(state.range(0));
    const auto pred = random_map(side, 5, 6.0), gt = random_map(side, 6, 6.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            dadp::compute_metrics(pred, gt, dadp::AlignmentMode::median_scale_shift));
}

void bm_metrics_serial(benchmark::State& state) {
    const int side = int(state.range(0));
    const auto pred = random_map(side, 5, 6.0), gt = random_map(side, 6, 6.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            dadp::ref::compute_metrics(pred, gt, dadp::AlignmentMode::median_scale_shift));
}

void bm_total_loss_parallel(benchmark::State& state) {
    const int side = int(state.range(0));
    const auto pred = random_map(side, 7, 6.0), gt = random_map(side, 8, 6.0);
    const dadp::LossConfig cfg;
    for (auto _ : state)
        benchmark::DoNotOptimize(dadp::total_loss(pred, gt, dadp::ObjectMaskSet{}, cfg));
}

void bm_total_loss_serial(benchmark::State& state) {
    const int side = int(state.range(0));
    const auto pred = random_map(side, 7, 6.0), gt = random_map(side, 8, 6.0);
    const dadp::LossConfig cfg;
    for (auto _ : state)
        benchmark::DoNotOptimize(dadp::ref::total_loss(pred, gt, dadp::ObjectMaskSet{}, cfg));
}

BENCHMARK(bm_q_sample_parallel)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(bm_q_sample_serial)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(bm_noise_mse_parallel)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(bm_noise_mse_serial)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(bm_metrics_parallel)->Arg(64)->Arg(256);
BENCHMARK(bm_metrics_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_total_loss_parallel)->Arg(64)->Arg(256);
BENCHMARK(bm_total_loss_serial)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
