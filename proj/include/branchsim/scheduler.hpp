// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/engine.hpp"
#include "branchsim/sim_core.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace branchsim {

enum class Policy {
    Vanilla,          // one branch, no ensembling
    SelfConsistency,  // N branches, wait for all, majority vote
    SART,             // N branches, early stop at M, two-phase pruning
    SARTNoPrune,      // N branches, early stop at M, pruning disabled
};

enum class Aggregation { HighestReward, MajorityVote, Single };

std::string_view to_string(Policy p);
std::string_view to_string(Aggregation a);
/// Accepts "vanilla", "sc" / "self-consistency", "sart", "sart-noprune".
std::optional<Policy> parse_policy(std::string_view name);
/// Accepts "highest_reward", "majority_vote", "single".
std::optional<Aggregation> parse_aggregation(std::string_view name);
Aggregation default_aggregation(Policy p);

struct PolicyConfig {
    Policy policy = Policy::SART;
    int N = 8;
    int M = 4;
    double alpha = 0.5;
    int beta = 4;
    Aggregation aggregation = Aggregation::HighestReward;

    /// Defaults for a policy at a given N: M = max(1, N/2), beta = N/2,
    /// alpha = 0.5, and the policy's natural aggregation.
    static PolicyConfig defaults(Policy policy, int N);

    bool prunes() const noexcept { return policy == Policy::SART; }
    bool early_stops() const noexcept {
        return policy == Policy::SART || policy == Policy::SARTNoPrune;
    }

    /// Vanilla is forced to N = M = 1; policies without early stopping use M = N;
    /// policies without pruning use beta = 0.
    PolicyConfig normalized() const;

    /// Throws ConfigError naming "policy.<field>".
    void validate() const;
};

enum class Phase { Explore, Exploit };

struct RequestMeta {
    Phase phase = Phase::Explore;
    double threshold = 0.0;
    int max_num_pruned = 0;
    int num_completed = 0;
    int num_pruned = 0;

    static RequestMeta initial(const PolicyConfig& cfg);
};

/// One batched branch of a request as seen at the end of a decode chunk.
struct ChunkBranchView {
    int index = 1;
    bool completed = false;
    /// Step within the chunk at which the branch finished; only for completed.
    Tokens completion_step = 0;
    double final_reward = 0.0;
    /// Reward-model score at the branch's current length.
    double current_reward = 0.0;
};

struct ChunkActions {
    std::optional<double> new_threshold;
    std::vector<int> completed;
    std::vector<int> pruned;
    bool finalize = false;
};

/// Per-request bookkeeping after a decode chunk, in this order: phase switch
/// on the first completion (threshold := final reward of the earliest
/// completion), completion counting, pruning of incomplete branches below the
/// threshold in ascending index while under the cap, then the finalize check
/// (num_completed >= M or num_completed + num_pruned == N).
ChunkActions on_chunk_end(RequestMeta& meta, const PolicyConfig& cfg,
                          std::span<const ChunkBranchView> batched);

struct TerminatedBranch {
    int index = 1;
    BranchState state = BranchState::Completed;
    int answer_label = 0;
    /// Final reward for completed branches, reward at prune time for pruned ones.
    double reward = 0.0;
};

struct FinalResponse {
    std::int64_t request_id = 0;
    /// Chosen branch index, or 0 when the answer is a vote consensus.
    int chosen_branch = 0;
    int label = 0;
    bool is_correct = false;
    Millis finalize_time = 0;
};

/// Aggregates terminated branches into the request's answer. Ties always go to
/// the lowest branch index. If no branch completed, pruned branches are used.
FinalResponse finalize(Aggregation aggregation, std::int64_t request_id,
                       std::span<const TerminatedBranch> terminated, Millis finalize_time);

} // namespace branchsim
