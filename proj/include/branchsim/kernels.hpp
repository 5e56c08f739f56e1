// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Data-parallel batch kernels. Each has a serial reference in
// branchsim::serial and an OpenMP version in branchsim::omp; both produce
// bit-identical results because every unit of work draws from its own
// named stream and reductions are over integers or in index order.

#include "branchsim/orderstats.hpp"
#include "branchsim/simulation.hpp"
#include "branchsim/workload.hpp"

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <vector>

namespace branchsim {

enum class ExecMode { Serial, Parallel };

/// Monte Carlo trials per independently seeded block (stream "mc/<block>").
inline constexpr std::int64_t kMonteCarloBlock = 4096;

struct IsolatedBatch {
    /// records[i] belongs to request i.
    std::vector<RequestRecord> records;
    std::int64_t audit_failures = 0;
};

namespace serial {

/// hits[i] = number of trials whose M-th smallest of N draws is <= xs[i].
std::vector<std::int64_t> order_stat_hits(int M, int N, const Sampler& sampler,
                                          std::span<const double> xs, std::int64_t trials,
                                          std::uint64_t seed);

/// `count` single-request simulations; request i arrives at t=0 with
/// attributes from make_request(workload, i, 0, seed).
IsolatedBatch simulate_isolated(const SimulationConfig& cfg, const WorkloadConfig& workload,
                                std::int64_t count, std::uint64_t seed);

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace serial

namespace omp {

std::vector<std::int64_t> order_stat_hits(int M, int N, const Sampler& sampler,
                                          std::span<const double> xs, std::int64_t trials,
                                          std::uint64_t seed);

IsolatedBatch simulate_isolated(const SimulationConfig& cfg, const WorkloadConfig& workload,
                                std::int64_t count, std::uint64_t seed);

/// Runs fn(0..n-1) across threads; the first exception (by index) is rethrown.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace omp

std::vector<std::int64_t> order_stat_hits(int M, int N, const Sampler& sampler,
                                          std::span<const double> xs, std::int64_t trials,
                                          std::uint64_t seed, ExecMode mode);

IsolatedBatch simulate_isolated(const SimulationConfig& cfg, const WorkloadConfig& workload,
                                std::int64_t count, std::uint64_t seed, ExecMode mode);

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, ExecMode mode);

} // namespace branchsim
