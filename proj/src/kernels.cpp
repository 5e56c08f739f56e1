// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace branchsim {

namespace {

struct SortedGrid {
    std::vector<double> xs;
    std::vector<std::size_t> order; // xs[k] came from input position order[k]
};

SortedGrid sort_grid(std::span<const double> xs) {
    SortedGrid g;
    g.order.resize(xs.size());
    std::iota(g.order.begin(), g.order.end(), std::size_t{0});
    std::stable_sort(g.order.begin(), g.order.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    for (std::size_t k : g.order) {
        g.xs.push_back(xs[k]);
    }
    return g;
}

void check_order_stat_args(int M, int N, std::int64_t trials) {
    OrderStatQuery{M, N, 0.0}.validate();
    if (trials < 1) {
        throw std::domain_error("order_stat_hits: trials must be >= 1");
    }
}

std::int64_t block_count(std::int64_t trials) {
    return (trials + kMonteCarloBlock - 1) / kMonteCarloBlock;
}

// Adds one block's contribution to `diff`, a difference array over the sorted
// grid: a trial whose order statistic is v counts for every x >= v.
void run_block(int M, int N, const Sampler& sampler, const std::vector<double>& sorted_xs,
               std::int64_t block, std::int64_t trials, std::uint64_t seed,
               std::vector<std::int64_t>& diff, std::vector<double>& draws) {
    RngStream rng = split_stream(seed, "mc/" + std::to_string(block));
    const std::int64_t begin = block * kMonteCarloBlock;
    const std::int64_t end = std::min(trials, begin + kMonteCarloBlock);
    draws.resize(static_cast<std::size_t>(N));
    for (std::int64_t t = begin; t < end; ++t) {
        for (auto& d : draws) {
            d = sampler(rng);
        }
        auto nth = draws.begin() + (M - 1);
        std::nth_element(draws.begin(), nth, draws.end());
        const auto first = std::lower_bound(sorted_xs.begin(), sorted_xs.end(), *nth);
        diff[static_cast<std::size_t>(first - sorted_xs.begin())] += 1;
    }
}

std::vector<std::int64_t> finish_hits(const SortedGrid& g, const std::vector<std::int64_t>& diff) {
    std::vector<std::int64_t> hits(g.xs.size(), 0);
    std::int64_t running = 0;
    for (std::size_t k = 0; k < g.xs.size(); ++k) {
        running += diff[k];
        hits[g.order[k]] = running;
    }
    return hits;
}

RequestRecord isolated_one(const SimulationConfig& cfg, const WorkloadConfig& workload,
                           const BranchSource& source, std::int64_t i, std::uint64_t seed,
                           std::int64_t& audit_failures) {
    const Request req = make_request(workload, i, 0, seed);
    SimulationResult r = simulate(cfg, std::span<const Request>(&req, 1), source);
    audit_failures += r.audit_failures;
    return std::move(r.records.front());
}

} // namespace

namespace serial {

std::vector<std::int64_t> order_stat_hits(int M, int N, const Sampler& sampler,
                                          std::span<const double> xs, std::int64_t trials,
                                          std::uint64_t seed) {
    check_order_stat_args(M, N, trials);
    const SortedGrid g = sort_grid(xs);
    std::vector<std::int64_t> diff(g.xs.size() + 1, 0);
    std::vector<double> draws;
    for (std::int64_t b = 0; b < block_count(trials); ++b) {
        run_block(M, N, sampler, g.xs, b, trials, seed, diff, draws);
    }
    return finish_hits(g, diff);
}

IsolatedBatch simulate_isolated(const SimulationConfig& cfg, const WorkloadConfig& workload,
                                std::int64_t count, std::uint64_t seed) {
    const BranchSource source = stochastic_branch_source(workload, cfg.engine.chunk_steps, seed);
    IsolatedBatch out;
    out.records.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        out.records.push_back(isolated_one(cfg, workload, source, i, seed, out.audit_failures));
    }
    return out;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
    for (std::size_t i = 0; i < n; ++i) {
        fn(i);
    }
}

} // namespace serial

namespace omp {

std::vector<std::int64_t> order_stat_hits(int M, int N, const Sampler& sampler,
                                          std::span<const double> xs, std::int64_t trials,
                                          std::uint64_t seed) {
    check_order_stat_args(M, N, trials);
    const SortedGrid g = sort_grid(xs);
    std::vector<std::int64_t> diff(g.xs.size() + 1, 0);
    const std::int64_t blocks = block_count(trials);

#pragma omp parallel
    {
        std::vector<std::int64_t> local(diff.size(), 0);
        std::vector<double> draws;
#pragma omp for schedule(static)
        for (std::int64_t b = 0; b < blocks; ++b) {
            run_block(M, N, sampler, g.xs, b, trials, seed, local, draws);
        }
#pragma omp critical
        for (std::size_t k = 0; k < diff.size(); ++k) {
            diff[k] += local[k];
        }
    }
    return finish_hits(g, diff);
}

IsolatedBatch simulate_isolated(const SimulationConfig& cfg, const WorkloadConfig& workload,
                                std::int64_t count, std::uint64_t seed) {
    const BranchSource source = stochastic_branch_source(workload, cfg.engine.chunk_steps, seed);
    IsolatedBatch out;
    out.records.resize(static_cast<std::size_t>(count));
    std::vector<std::int64_t> failures(static_cast<std::size_t>(count), 0);
    for_each_index(static_cast<std::size_t>(count), [&](std::size_t i) {
        out.records[i] = isolated_one(cfg, workload, source, static_cast<std::int64_t>(i), seed,
                                      failures[i]);
    });
    out.audit_failures = std::accumulate(failures.begin(), failures.end(), std::int64_t{0});
    return out;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace omp

std::vector<std::int64_t> order_stat_hits(int M, int N, const Sampler& sampler,
                                          std::span<const double> xs, std::int64_t trials,
                                          std::uint64_t seed, ExecMode mode) {
    return mode == ExecMode::Serial ? serial::order_stat_hits(M, N, sampler, xs, trials, seed)
                                    : omp::order_stat_hits(M, N, sampler, xs, trials, seed);
}

IsolatedBatch simulate_isolated(const SimulationConfig& cfg, const WorkloadConfig& workload,
                                std::int64_t count, std::uint64_t seed, ExecMode mode) {
    return mode == ExecMode::Serial ? serial::simulate_isolated(cfg, workload, count, seed)
                                    : omp::simulate_isolated(cfg, workload, count, seed);
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, ExecMode mode) {
    if (mode == ExecMode::Serial) {
        serial::for_each_index(n, fn);
    } else {
        omp::for_each_index(n, fn);
    }
}

} // namespace branchsim
