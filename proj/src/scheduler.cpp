// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/scheduler.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace branchsim {

std::string_view to_string(Policy p) {
    switch (p) {
    case Policy::Vanilla: return "vanilla";
    case Policy::SelfConsistency: return "sc";
    case Policy::SART: return "sart";
    case Policy::SARTNoPrune: return "sart-noprune";
    }
    return "unknown";
}

std::string_view to_string(Aggregation a) {
    switch (a) {
    case Aggregation::HighestReward: return "highest_reward";
    case Aggregation::MajorityVote: return "majority_vote";
    case Aggregation::Single: return "single";
    }
    return "unknown";
}

std::optional<Policy> parse_policy(std::string_view name) {
    if (name == "vanilla") return Policy::Vanilla;
    if (name == "sc" || name == "self-consistency") return Policy::SelfConsistency;
    if (name == "sart") return Policy::SART;
    if (name == "sart-noprune") return Policy::SARTNoPrune;
    return std::nullopt;
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
    if (name == "highest_reward") return Aggregation::HighestReward;
    if (name == "majority_vote") return Aggregation::MajorityVote;
    if (name == "single") return Aggregation::Single;
    return std::nullopt;
}

Aggregation default_aggregation(Policy p) {
    switch (p) {
    case Policy::Vanilla: return Aggregation::Single;
    case Policy::SelfConsistency: return Aggregation::MajorityVote;
    case Policy::SART:
    case Policy::SARTNoPrune: return Aggregation::HighestReward;
    }
    return Aggregation::HighestReward;
}

PolicyConfig PolicyConfig::defaults(Policy policy, int N) {
    PolicyConfig cfg;
    cfg.policy = policy;
    cfg.N = N;
    cfg.M = std::max(1, N / 2);
    cfg.alpha = 0.5;
    cfg.beta = N / 2;
    cfg.aggregation = default_aggregation(policy);
    return cfg.normalized();
}

PolicyConfig PolicyConfig::normalized() const {
    PolicyConfig out = *this;
    if (out.policy == Policy::Vanilla) {
        out.N = 1;
        out.M = 1;
    }
    if (!out.early_stops()) {
        out.M = out.N;
    }
    if (!out.prunes()) {
        out.beta = 0;
    }
    return out;
}

void PolicyConfig::validate() const {
    if (N < 1) {
        throw ConfigError("policy.N", "must be >= 1 (got " + std::to_string(N) + ")");
    }
    if (M < 1 || M > N) {
        throw ConfigError("policy.M", "must satisfy 1 <= M <= N (got M=" + std::to_string(M) +
                                          ", N=" + std::to_string(N) + ")");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("policy.alpha", "must lie in [0, 1]");
    }
    if (beta < 0 || beta > N - 1) {
        throw ConfigError("policy.beta", "must satisfy 0 <= beta <= N-1 (got beta=" +
                                             std::to_string(beta) + ", N=" + std::to_string(N) + ")");
    }
    if (policy == Policy::Vanilla && (N != 1 || M != 1)) {
        throw ConfigError("policy.N", "vanilla requires N = M = 1");
    }
    if (aggregation == Aggregation::Single && N != 1) {
        throw ConfigError("policy.aggregation", "single requires N = 1");
    }
}

RequestMeta RequestMeta::initial(const PolicyConfig& cfg) {
    RequestMeta meta;
    meta.phase = Phase::Explore;
    meta.threshold = cfg.alpha;
    meta.max_num_pruned = cfg.prunes() ? cfg.beta : 0;
    return meta;
}

ChunkActions on_chunk_end(RequestMeta& meta, const PolicyConfig& cfg,
                          std::span<const ChunkBranchView> batched) {
    std::vector<ChunkBranchView> views(batched.begin(), batched.end());
    std::sort(views.begin(), views.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });

    ChunkActions actions;

    if (cfg.prunes() && meta.phase == Phase::Explore) {
        const ChunkBranchView* first = nullptr;
        for (const auto& v : views) {
            if (v.completed && (first == nullptr || v.completion_step < first->completion_step)) {
                first = &v;
            }
        }
        if (first != nullptr) {
            meta.phase = Phase::Exploit;
            meta.threshold = first->final_reward;
            meta.max_num_pruned = cfg.N - 1;
            actions.new_threshold = meta.threshold;
        }
    }

    for (const auto& v : views) {
        if (v.completed) {
            meta.num_completed += 1;
            actions.completed.push_back(v.index);
        }
    }

    if (cfg.prunes()) {
        for (const auto& v : views) {
            if (v.completed) {
                continue;
            }
            if (meta.num_pruned < meta.max_num_pruned && v.current_reward < meta.threshold) {
                meta.num_pruned += 1;
                actions.pruned.push_back(v.index);
            }
        }
    }

    actions.finalize =
        meta.num_completed >= cfg.M || meta.num_completed + meta.num_pruned == cfg.N;
    return actions;
}

namespace {

const TerminatedBranch* argmax_reward(std::span<const TerminatedBranch> items, BranchState state) {
    const TerminatedBranch* best = nullptr;
    for (const auto& b : items) {
        if (b.state != state) {
            continue;
        }
        if (best == nullptr || b.reward > best->reward ||
            (b.reward == best->reward && b.index < best->index)) {
            best = &b;
        }
    }
    return best;
}

// Modal label among branches in `state`; ties go to the label whose first
// occurrence has the lowest branch index. Returns the index of that branch.
const TerminatedBranch* majority(std::span<const TerminatedBranch> items, BranchState state) {
    std::vector<const TerminatedBranch*> pool;
    for (const auto& b : items) {
        if (b.state == state) {
            pool.push_back(&b);
        }
    }
    if (pool.empty()) {
        return nullptr;
    }
    std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) { return a->index < b->index; });
    std::map<int, int> counts;
    for (auto* b : pool) {
        counts[b->answer_label] += 1;
    }
    const TerminatedBranch* best = nullptr;
    int best_count = 0;
    for (auto* b : pool) {
        const int c = counts[b->answer_label];
        if (c > best_count) {
            best = b;
            best_count = c;
        }
    }
    return best;
}

} // namespace

FinalResponse finalize(Aggregation aggregation, std::int64_t request_id,
                       std::span<const TerminatedBranch> terminated, Millis finalize_time) {
    require(!terminated.empty(), "finalize: no terminated branches");

    const TerminatedBranch* chosen = nullptr;
    bool consensus = false;
    switch (aggregation) {
    case Aggregation::HighestReward:
        chosen = argmax_reward(terminated, BranchState::Completed);
        if (chosen == nullptr) {
            chosen = argmax_reward(terminated, BranchState::Pruned);
        }
        break;
    case Aggregation::MajorityVote:
        chosen = majority(terminated, BranchState::Completed);
        if (chosen == nullptr) {
            chosen = majority(terminated, BranchState::Pruned);
        }
        consensus = true;
        break;
    case Aggregation::Single: {
        int completed = 0;
        for (const auto& b : terminated) {
            if (b.state == BranchState::Completed) {
                ++completed;
                chosen = &b;
            }
        }
        require(completed <= 1, "finalize: single aggregation with several completed branches");
        break;
    }
    }
    require(chosen != nullptr, "finalize: no completed or pruned branch to choose from");

    FinalResponse out;
    out.request_id = request_id;
    out.chosen_branch = consensus ? 0 : chosen->index;
    out.label = chosen->answer_label;
    out.is_correct = chosen->answer_label == 0;
    out.finalize_time = finalize_time;
    return out;
}

} // namespace branchsim
