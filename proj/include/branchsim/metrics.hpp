// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/engine.hpp"
#include "branchsim/events.hpp"
#include "branchsim/sim_core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace branchsim {

struct BranchRecord {
    int index = 1;
    BranchState state = BranchState::Queued;
    Tokens tokens_decoded = 0;
    Tokens target_length = 0;
    int answer_label = 0;
    double final_reward = 0.0;
};

struct RequestRecord {
    std::int64_t request_id = 0;
    Millis arrival_time = 0;
    Millis prefill_start = 0;
    Millis finalize_time = 0;
    bool is_correct = false;
    int final_label = 0;
    int chosen_branch = 0;
    /// Decode chunks in which the request had at least one batched branch.
    int decode_chunks = 0;
    /// Time-integrated KV residency of the request (token-ms).
    std::int64_t kv_token_ms = 0;
    std::vector<BranchRecord> branches;

    Millis queuing_latency() const { return prefill_start - arrival_time; }
    Millis inference_latency() const { return finalize_time - prefill_start; }
    Millis e2e_latency() const { return finalize_time - arrival_time; }
};

/// Engine state after the bookkeeping that follows a decode chunk.
struct OccupancySample {
    Millis time = 0;
    /// Wall time of the chunk that ended at `time`.
    Millis chunk_ms = 0;
    int running_branches = 0;
    Tokens resident_tokens = 0;
};

/// Extracts the Occupancy events of a simulation trace.
std::vector<OccupancySample> occupancy_trace(std::span<const SimEvent> events);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
/// Requires a non-empty sample and p in (0, 100].
Millis percentile(std::span<const Millis> values, double p);

/// Fraction of correctly answered requests. Requires a non-empty sample.
double accuracy(std::span<const RequestRecord> records);

/// Sum of resident_tokens * chunk_ms over the trace (token-ms).
std::int64_t time_integrated_tokens(std::span<const OccupancySample> trace);

struct LatencySummary {
    Millis p50 = 0;
    Millis p90 = 0;
    Millis p97 = 0;
    Millis p99 = 0;
    double mean = 0.0;
};

LatencySummary summarize_latencies(std::span<const Millis> values);

struct TrialSummary {
    std::int64_t num_requests = 0;
    double accuracy = 0.0;
    LatencySummary e2e;
    LatencySummary queuing;
    LatencySummary inference;
    /// Mean target length of completed branches.
    double mean_completed_length = 0.0;
    std::int64_t kv_token_ms = 0;
    std::int64_t audit_failures = 0;
};

TrialSummary summarize_trial(std::span<const RequestRecord> records,
                             std::span<const OccupancySample> occupancy,
                             std::int64_t audit_failures);

struct MeanSd {
    double mean = 0.0;
    /// Sample standard deviation (n - 1); 0 for a single value.
    double sd = 0.0;
};

MeanSd mean_sd(std::span<const double> values);

} // namespace branchsim
