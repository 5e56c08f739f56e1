// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/sim_core.hpp"
#include "branchsim/workload.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace branchsim {

/// Cost and capacity model of one inference engine replica.
///
/// Prefill costs `prefill_ms_per_token * prompt_len`; one decode step with a
/// batch of b branches costs `step_base_ms + step_per_branch_ms * b`. Both are
/// rounded to whole milliseconds per charge.
struct EngineConfig {
    int max_batch = 64;           // B
    Tokens chunk_steps = 400;     // T
    double prefill_ms_per_token = 0.1;
    double step_base_ms = 2.0;
    double step_per_branch_ms = 0.05;
    Tokens kv_budget = 2'000'000;
    /// Optional cost per reward-model evaluation; zero by default.
    double prm_eval_ms = 0.0;

    Millis prefill_cost(Tokens prompt_len) const;
    double step_cost(int batch_size) const;
    /// T * step_cost(batch_size), charged for the whole chunk.
    Millis chunk_cost(int batch_size) const;

    /// Throws ConfigError naming "engine.<field>".
    void validate() const;
};

enum class BranchState { Queued, Running, Completed, Pruned, EarlyStopped };

std::string_view to_string(BranchState s);

inline bool is_terminal(BranchState s) {
    return s == BranchState::Completed || s == BranchState::Pruned || s == BranchState::EarlyStopped;
}

struct Branch {
    std::int64_t request_id = 0;
    int index = 1; // 1..N
    BranchOutcome outcome;
    RewardTrajectory trajectory;
    Tokens tokens_decoded = 0;
    BranchState state = BranchState::Queued;
    Millis enqueue_time = 0;
    Millis start_time = -1;
    Millis end_time = -1;

    Tokens remaining() const { return outcome.target_length - tokens_decoded; }
    bool terminal() const { return is_terminal(state); }
};

/// Token-level KV accounting. A request's prompt prefix is stored once and
/// shared by all of its branches; it stays resident until the last branch
/// terminates. Each running branch also reserves its not-yet-decoded tokens so
/// that admissions never let residency exceed the budget.
class KvLedger {
public:
    explicit KvLedger(Tokens budget);

    Tokens budget() const noexcept { return m_budget; }
    Tokens total_resident() const noexcept { return m_resident; }
    /// Resident tokens plus the outstanding reservations of running branches.
    Tokens committed() const noexcept { return m_resident + m_reserved; }
    bool can_commit(Tokens extra) const noexcept { return committed() + extra <= m_budget; }

    bool has_request(std::int64_t request_id) const;
    void open_request(std::int64_t request_id, Tokens prefix, int num_branches);
    /// Reserves the branch's remaining tokens; call when it enters the batch.
    void start_branch(const Branch& branch);
    /// Moves `tokens` of the branch's reservation into residency.
    void add_decoded(const Branch& branch, Tokens tokens);
    /// Frees a terminal branch; returns the number of tokens freed.
    Tokens release(const Branch& branch);

    /// Adds resident_tokens * delta to the running time integrals.
    void accumulate(Millis delta);

    Tokens request_resident(std::int64_t request_id) const;
    /// Time-integrated resident tokens of one request (token-ms).
    std::int64_t request_token_ms(std::int64_t request_id) const;
    std::int64_t total_token_ms() const noexcept { return m_total_token_ms; }

private:
    struct Entry {
        Tokens prefix = 0;
        bool prefix_resident = false;
        int live = 0;
        Tokens decoded = 0;
        Tokens reserved = 0;
        std::int64_t token_ms = 0;
        std::vector<bool> released;
        std::vector<Tokens> branch_reserved;
    };

    Entry& entry(std::int64_t request_id);
    const Entry& entry(std::int64_t request_id) const;

    Tokens m_budget;
    Tokens m_resident = 0;
    Tokens m_reserved = 0;
    std::int64_t m_total_token_ms = 0;
    std::map<std::int64_t, Entry> m_entries;
};

/// Prefix and branches of one request, for the from-scratch audit.
struct BranchGroup {
    Tokens prefix = 0;
    std::span<const Branch> branches;
};

/// Resident tokens recomputed from branch states alone:
/// sum(prefix * [any branch alive]) + sum over alive branches of tokens_decoded.
Tokens recompute_resident(std::span<const BranchGroup> groups);

/// Prefill a request and create its `num_branches` Queued branches. Returns
/// nullopt, without charging anything, if the prefix does not fit the budget.
std::optional<std::vector<Branch>> charge_prefill(const EngineConfig& cfg, SimClock& clock,
                                                  KvLedger& ledger, const Request& req,
                                                  int num_branches, const BranchSource& source);

struct Completion {
    Branch* branch = nullptr;
    /// Decode step within the chunk at which the branch finished (1..T).
    Tokens step = 0;
};

struct ChunkOutcome {
    Millis start_time = 0;
    Millis duration = 0;
    int batch_size = 0;
    std::vector<Completion> completions;
};

/// Decode every batched branch for up to T steps. The whole chunk is charged
/// at the batch size it started with; finished branches are marked Completed.
ChunkOutcome decode_chunk(const EngineConfig& cfg, SimClock& clock, KvLedger& ledger,
                          std::span<Branch* const> batch);

/// Releases the KV held by a terminal branch. Returns tokens freed.
Tokens release_branch(KvLedger& ledger, const Branch& branch);

} // namespace branchsim
