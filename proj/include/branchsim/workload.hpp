// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/sim_core.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace branchsim {

struct LengthParams {
    double median = 8000.0;
    double sigma_log = 0.5;
    Tokens min_len = 256;
    Tokens max_len = 32768;
};

/// Calibration of the stochastic stand-ins for the LLM (lengths, answers)
/// and the process reward model (reward trajectories). None of these values
/// are measured; they are declared simulator parameters.
struct WorkloadConfig {
    // Branch length: lognormal with the given median, clipped to [min_len, max_len].
    double length_median = 8000.0;
    double length_sigma_log = 0.5;
    Tokens min_len = 256;
    Tokens max_len = 32768;

    // Per-request probability that a branch answers correctly ~ Beta(a, b).
    double difficulty_beta_a = 4.0;
    double difficulty_beta_b = 2.0;
    int num_wrong_labels = 4;

    Tokens prompt_len_min = 64;
    Tokens prompt_len_max = 1024;

    double reward_correct_mean = 0.8;
    double reward_correct_sd = 0.1;
    double reward_incorrect_mean = 0.4;
    double reward_incorrect_sd = 0.15;
    /// Noise scale of intermediate rewards; shrinks linearly to 0 at the final token.
    double reward_traj_sd = 0.15;
    /// Reward reported before the first checkpoint.
    double reward_prior = 0.6;
    /// Required gap between the correct and incorrect reward means.
    double min_reward_separation = 0.3;

    /// Throws ConfigError naming "workload.<field>".
    void validate() const;

    LengthParams length_params() const;
};

inline LengthParams WorkloadConfig::length_params() const {
    return LengthParams{length_median, length_sigma_log, min_len, max_len};
}

struct Request {
    std::int64_t id = 0;
    Millis arrival_time = 0;
    Tokens prompt_len = 1;
    double p_correct = 1.0;
    LengthParams length;
};

struct BranchOutcome {
    Tokens target_length = 1;
    /// 0 is the correct answer; 1..k are distinct wrong answers.
    int answer_label = 0;
    double final_reward = 0.0;
};

/// Piecewise-constant reward as a function of decoded tokens.
class RewardTrajectory {
public:
    RewardTrajectory() = default;
    /// `checkpoints` must be strictly increasing in tokens with values in [0,1].
    RewardTrajectory(double prior, std::vector<std::pair<Tokens, double>> checkpoints);

    /// Value at the greatest checkpoint <= tokens_decoded, or the prior before
    /// the first checkpoint.
    double at(Tokens tokens_decoded) const;

    double prior() const noexcept { return m_prior; }
    const std::vector<std::pair<Tokens, double>>& checkpoints() const noexcept { return m_checkpoints; }

private:
    double m_prior = 0.0;
    std::vector<std::pair<Tokens, double>> m_checkpoints;
};

double reward_at(const RewardTrajectory& traj, Tokens tokens_decoded);

/// Arrival times (ms) of a Poisson process with `rate` requests per second,
/// truncated at `horizon`. horizon == 0 yields no arrivals.
std::vector<Millis> generate_arrivals(double rate, Millis horizon, RngStream& rng);

/// Arrivals from stream "arrivals"; per-request attributes from "request/<id>".
std::vector<Request> generate_requests(const WorkloadConfig& cfg, double rate, Millis horizon,
                                       std::uint64_t seed);

/// Attributes of request `id` (prompt length, difficulty, length model).
Request make_request(const WorkloadConfig& cfg, std::int64_t id, Millis arrival_time,
                     std::uint64_t seed);

/// One branch length: round(lognormal(median, sigma_log)) clipped to [min_len, max_len].
Tokens sample_length(const LengthParams& params, RngStream& rng);

BranchOutcome sample_branch_outcome(const Request& req, const WorkloadConfig& cfg, RngStream& rng);

/// Rewards at every multiple of `checkpoint_interval` below the target length
/// plus the final token, where the value is exactly the final reward.
RewardTrajectory sample_trajectory(const BranchOutcome& outcome, const WorkloadConfig& cfg,
                                   Tokens checkpoint_interval, RngStream& rng);

/// P(target_length <= x) for lengths drawn by sample_branch_outcome.
double length_cdf(const LengthParams& params, double x);

struct BranchDraw {
    BranchOutcome outcome;
    RewardTrajectory trajectory;
};

/// Supplies the (outcome, trajectory) of branch `branch_index` (1-based) of a
/// request. Must be a pure function of its arguments.
using BranchSource = std::function<BranchDraw(const Request&, int branch_index)>;

/// Stochastic source: outcome from "branch/<id>/<j>", trajectory from
/// "traj/<id>/<j>". Branch j of a request is the same whatever N, T or
/// policy is in use.
BranchSource stochastic_branch_source(WorkloadConfig cfg, Tokens checkpoint_interval,
                                      std::uint64_t seed);

} // namespace branchsim
