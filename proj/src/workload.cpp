// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace branchsim {

namespace {

void check(bool ok, const char* field, const std::string& msg) {
    if (!ok) {
        throw ConfigError(std::string("workload.") + field, msg);
    }
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

void WorkloadConfig::validate() const {
    check(length_median > 0, "length_median", "must be > 0");
    check(length_sigma_log >= 0, "length_sigma_log", "must be >= 0");
    check(min_len >= 1, "min_len", "must be >= 1");
    check(max_len >= min_len, "max_len", "must be >= min_len");
    check(difficulty_beta_a > 0, "difficulty_beta_a", "must be > 0");
    check(difficulty_beta_b > 0, "difficulty_beta_b", "must be > 0");
    check(num_wrong_labels >= 1, "num_wrong_labels", "must be >= 1");
    check(prompt_len_min >= 1, "prompt_len_min", "must be >= 1");
    check(prompt_len_max >= prompt_len_min, "prompt_len_max", "must be >= prompt_len_min");
    check(reward_correct_sd >= 0, "reward_correct_sd", "must be >= 0");
    check(reward_incorrect_sd >= 0, "reward_incorrect_sd", "must be >= 0");
    check(reward_traj_sd >= 0, "reward_traj_sd", "must be >= 0");
    check(reward_prior >= 0 && reward_prior <= 1, "reward_prior", "must lie in [0, 1]");
    check(reward_correct_mean >= 0 && reward_correct_mean <= 1, "reward_correct_mean",
          "must lie in [0, 1]");
    check(reward_incorrect_mean >= 0 && reward_incorrect_mean <= 1, "reward_incorrect_mean",
          "must lie in [0, 1]");
    check(min_reward_separation >= 0, "min_reward_separation", "must be >= 0");
    check(reward_correct_mean - reward_incorrect_mean >= min_reward_separation,
          "reward_correct_mean",
          "must exceed reward_incorrect_mean by at least min_reward_separation");
}

RewardTrajectory::RewardTrajectory(double prior, std::vector<std::pair<Tokens, double>> checkpoints)
    : m_prior(prior), m_checkpoints(std::move(checkpoints)) {
    require(prior >= 0 && prior <= 1, "RewardTrajectory: prior outside [0,1]");
    for (std::size_t i = 0; i < m_checkpoints.size(); ++i) {
        require(m_checkpoints[i].second >= 0 && m_checkpoints[i].second <= 1,
                "RewardTrajectory: reward outside [0,1]");
        require(i == 0 || m_checkpoints[i - 1].first < m_checkpoints[i].first,
                "RewardTrajectory: checkpoints must be strictly increasing");
    }
}

double RewardTrajectory::at(Tokens tokens_decoded) const {
    require(tokens_decoded >= 0, "reward_at: negative token count");
    auto it = std::upper_bound(m_checkpoints.begin(), m_checkpoints.end(), tokens_decoded,
                               [](Tokens t, const auto& cp) { return t < cp.first; });
    if (it == m_checkpoints.begin()) {
        return m_prior;
    }
    return std::prev(it)->second;
}

double reward_at(const RewardTrajectory& traj, Tokens tokens_decoded) {
    return traj.at(tokens_decoded);
}

std::vector<Millis> generate_arrivals(double rate, Millis horizon, RngStream& rng) {
    if (!(rate > 0)) {
        throw ConfigError("arrival_rate", "must be > 0");
    }
    if (horizon < 0) {
        throw ConfigError("horizon_ms", "must be >= 0");
    }
    std::vector<Millis> out;
    const double mean_gap_ms = 1000.0 / rate;
    double t = 0.0;
    for (;;) {
        t += rng.exponential(mean_gap_ms);
        if (t > static_cast<double>(horizon)) {
            break;
        }
        out.push_back(static_cast<Millis>(std::floor(t)));
    }
    return out;
}

Request make_request(const WorkloadConfig& cfg, std::int64_t id, Millis arrival_time,
                     std::uint64_t seed) {
    RngStream rng = split_stream(seed, "request/" + std::to_string(id));
    Request req;
    req.id = id;
    req.arrival_time = arrival_time;
    req.prompt_len = rng.uniform_int(cfg.prompt_len_min, cfg.prompt_len_max);
    req.p_correct = rng.beta(cfg.difficulty_beta_a, cfg.difficulty_beta_b);
    req.length = cfg.length_params();
    return req;
}

std::vector<Request> generate_requests(const WorkloadConfig& cfg, double rate, Millis horizon,
                                       std::uint64_t seed) {
    RngStream arrivals_rng = split_stream(seed, "arrivals");
    const auto arrivals = generate_arrivals(rate, horizon, arrivals_rng);
    std::vector<Request> out;
    out.reserve(arrivals.size());
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        out.push_back(make_request(cfg, static_cast<std::int64_t>(i), arrivals[i], seed));
    }
    return out;
}

Tokens sample_length(const LengthParams& params, RngStream& rng) {
    const double raw = rng.lognormal_median(params.median, params.sigma_log);
    return static_cast<Tokens>(std::clamp(std::round(raw), static_cast<double>(params.min_len),
                                          static_cast<double>(params.max_len)));
}

BranchOutcome sample_branch_outcome(const Request& req, const WorkloadConfig& cfg, RngStream& rng) {
    BranchOutcome out;
    // Length and correctness come from separate draws so they are independent.
    out.target_length = sample_length(req.length, rng);

    const bool correct = rng.uniform() < req.p_correct;
    if (correct) {
        out.answer_label = 0;
        out.final_reward = clip01(rng.normal(cfg.reward_correct_mean, cfg.reward_correct_sd));
    } else {
        out.answer_label = static_cast<int>(rng.uniform_int(1, cfg.num_wrong_labels));
        out.final_reward = clip01(rng.normal(cfg.reward_incorrect_mean, cfg.reward_incorrect_sd));
    }
    return out;
}

RewardTrajectory sample_trajectory(const BranchOutcome& outcome, const WorkloadConfig& cfg,
                                   Tokens checkpoint_interval, RngStream& rng) {
    require(checkpoint_interval >= 1, "sample_trajectory: checkpoint interval must be >= 1");
    const Tokens len = outcome.target_length;
    std::vector<std::pair<Tokens, double>> cps;
    cps.reserve(static_cast<std::size_t>(len / checkpoint_interval) + 1);
    for (Tokens t = checkpoint_interval; t < len; t += checkpoint_interval) {
        const double sd = cfg.reward_traj_sd * (1.0 - static_cast<double>(t) / static_cast<double>(len));
        cps.emplace_back(t, clip01(outcome.final_reward + rng.normal(0.0, sd)));
    }
    cps.emplace_back(len, outcome.final_reward);
    return RewardTrajectory(cfg.reward_prior, std::move(cps));
}

double length_cdf(const LengthParams& params, double x) {
    const double k = std::floor(x);
    if (k < static_cast<double>(params.min_len)) {
        return 0.0;
    }
    if (k >= static_cast<double>(params.max_len)) {
        return 1.0;
    }
    if (params.sigma_log == 0.0) {
        return k >= std::round(params.median) ? 1.0 : 0.0;
    }
    // round(X) <= k  <=>  X < k + 0.5
    const double z = (std::log(k + 0.5) - std::log(params.median)) / params.sigma_log;
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

BranchSource stochastic_branch_source(WorkloadConfig cfg, Tokens checkpoint_interval,
                                      std::uint64_t seed) {
    return [cfg = std::move(cfg), checkpoint_interval, seed](const Request& req, int j) {
        const std::string suffix = std::to_string(req.id) + "/" + std::to_string(j);
        RngStream outcome_rng = split_stream(seed, "branch/" + suffix);
        RngStream traj_rng = split_stream(seed, "traj/" + suffix);
        BranchDraw draw;
        draw.outcome = sample_branch_outcome(req, cfg, outcome_rng);
        draw.trajectory = sample_trajectory(draw.outcome, cfg, checkpoint_interval, traj_rng);
        return draw;
    };
}

} // namespace branchsim
