// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP for the data-parallel kernels.

#include "branchsim/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace branchsim;

namespace {

const std::vector<double>& grid() {
    static const std::vector<double> xs = [] {
        std::vector<double> v;
        for (int k = 0; k <= 20; ++k) {
            v.push_back(k / 20.0);
        }
        return v;
    }();
    return xs;
}

template <ExecMode Mode>
void BM_OrderStatHits(benchmark::State& state) {
    const auto trials = state.range(0);
    const Sampler s = uniform_sampler();
    for (auto _ : state) {
        benchmark::DoNotOptimize(order_stat_hits(4, 8, s, grid(), trials, 1, Mode));
    }
    state.SetItemsProcessed(state.iterations() * trials);
}

template <ExecMode Mode>
void BM_SimulateIsolated(benchmark::State& state) {
    const auto count = state.range(0);
    SimulationConfig cfg;
    cfg.policy = PolicyConfig::defaults(Policy::SART, 8);
    const WorkloadConfig w;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_isolated(cfg, w, count, 1, Mode));
    }
    state.SetItemsProcessed(state.iterations() * count);
}

} // namespace

BENCHMARK(BM_OrderStatHits<ExecMode::Serial>)->Name("order_stat_hits/serial")->Arg(100'000)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OrderStatHits<ExecMode::Parallel>)->Name("order_stat_hits/omp")->Arg(100'000)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateIsolated<ExecMode::Serial>)->Name("simulate_isolated/serial")->Arg(2'000)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateIsolated<ExecMode::Parallel>)->Name("simulate_isolated/omp")->Arg(2'000)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
