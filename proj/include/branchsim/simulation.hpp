// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/engine.hpp"
#include "branchsim/events.hpp"
#include "branchsim/metrics.hpp"
#include "branchsim/scheduler.hpp"
#include "branchsim/workload.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace branchsim {

struct SimulationConfig {
    EngineConfig engine;
    PolicyConfig policy;
};

struct SimulationResult {
    /// One record per request, ordered by request id.
    std::vector<RequestRecord> records;
    std::vector<SimEvent> events;
    std::vector<OccupancySample> occupancy;
    /// Request ids in the order they were prefilled.
    std::vector<std::int64_t> prefill_order;
    std::int64_t chunks = 0;
    std::int64_t audit_checks = 0;
    std::int64_t audit_failures = 0;
    Millis end_time = 0;
};

/// Runs the continuous-batching scheduling loop until every request has been
/// finalized:
///
///   1. fill the batch up to B, taking queued branches first and prefilling
///      the oldest arrived request only when no branch is waiting;
///   2. decode one chunk of up to T steps with whatever is batched;
///   3. per involved request (ascending id): phase switch, completions,
///      pruning, finalization and KV release;
///   4. audit the KV ledger against a from-scratch recount.
///
/// When nothing is running or waiting the clock jumps to the next arrival.
/// `requests` must be sorted by arrival time. Single-threaded.
SimulationResult simulate(const SimulationConfig& cfg, std::span<const Request> requests,
                          const BranchSource& source);

} // namespace branchsim
