// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace branchsim {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        if (known.count(key) == 0) {
            throw ConfigError(join(prefix, key), "unknown field");
        }
    }
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void read(const json& obj, const std::string& prefix, const std::string& key, double& out) {
    if (const json* v = find(obj, key)) {
        if (!v->is_number()) {
            throw ConfigError(join(prefix, key), "expected a number");
        }
        out = v->get<double>();
    }
}

template <typename Int>
void read_int(const json& obj, const std::string& prefix, const std::string& key, Int& out) {
    if (const json* v = find(obj, key)) {
        if (!v->is_number_integer()) {
            throw ConfigError(join(prefix, key), "expected an integer");
        }
        if constexpr (std::is_unsigned_v<Int>) {
            if (v->is_number_unsigned()) {
                out = v->get<Int>();
            } else if (v->get<std::int64_t>() >= 0) {
                out = static_cast<Int>(v->get<std::int64_t>());
            } else {
                throw ConfigError(join(prefix, key), "must be non-negative");
            }
        } else {
            out = static_cast<Int>(v->get<std::int64_t>());
        }
    }
}

void read(const json& obj, const std::string& prefix, const std::string& key, std::string& out) {
    if (const json* v = find(obj, key)) {
        if (!v->is_string()) {
            throw ConfigError(join(prefix, key), "expected a string");
        }
        out = v->get<std::string>();
    }
}

const json& block(const json& doc, const std::string& key, const json& empty) {
    const json* v = find(doc, key);
    if (v == nullptr) {
        return empty;
    }
    if (!v->is_object()) {
        throw ConfigError(key, "expected an object");
    }
    return *v;
}

void parse_workload(const json& obj, WorkloadConfig& w) {
    const std::string p = "workload";
    reject_unknown(obj, p,
                   {"length_median", "length_sigma_log", "min_len", "max_len", "difficulty_beta_a",
                    "difficulty_beta_b", "num_wrong_labels", "prompt_len_min", "prompt_len_max",
                    "reward_correct_mean", "reward_correct_sd", "reward_incorrect_mean",
                    "reward_incorrect_sd", "reward_traj_sd", "reward_prior",
                    "min_reward_separation"});
    read(obj, p, "length_median", w.length_median);
    read(obj, p, "length_sigma_log", w.length_sigma_log);
    read_int(obj, p, "min_len", w.min_len);
    read_int(obj, p, "max_len", w.max_len);
    read(obj, p, "difficulty_beta_a", w.difficulty_beta_a);
    read(obj, p, "difficulty_beta_b", w.difficulty_beta_b);
    read_int(obj, p, "num_wrong_labels", w.num_wrong_labels);
    read_int(obj, p, "prompt_len_min", w.prompt_len_min);
    read_int(obj, p, "prompt_len_max", w.prompt_len_max);
    read(obj, p, "reward_correct_mean", w.reward_correct_mean);
    read(obj, p, "reward_correct_sd", w.reward_correct_sd);
    read(obj, p, "reward_incorrect_mean", w.reward_incorrect_mean);
    read(obj, p, "reward_incorrect_sd", w.reward_incorrect_sd);
    read(obj, p, "reward_traj_sd", w.reward_traj_sd);
    read(obj, p, "reward_prior", w.reward_prior);
    read(obj, p, "min_reward_separation", w.min_reward_separation);
}

void parse_engine(const json& obj, EngineConfig& e) {
    const std::string p = "engine";
    reject_unknown(obj, p,
                   {"max_batch", "chunk_steps", "prefill_ms_per_token", "step_base_ms",
                    "step_per_branch_ms", "kv_budget", "prm_eval_ms"});
    read_int(obj, p, "max_batch", e.max_batch);
    read_int(obj, p, "chunk_steps", e.chunk_steps);
    read(obj, p, "prefill_ms_per_token", e.prefill_ms_per_token);
    read(obj, p, "step_base_ms", e.step_base_ms);
    read(obj, p, "step_per_branch_ms", e.step_per_branch_ms);
    read_int(obj, p, "kv_budget", e.kv_budget);
    read(obj, p, "prm_eval_ms", e.prm_eval_ms);
}

void parse_policy_block(const json& obj, Scenario& s) {
    const std::string p = "policy";
    reject_unknown(obj, p, {"name", "N", "M", "alpha", "beta", "aggregation"});

    std::string name = std::string(to_string(s.policy.policy));
    read(obj, p, "name", name);
    const auto policy = parse_policy(name);
    if (!policy) {
        throw ConfigError("policy.name",
                          "unknown policy '" + name + "' (expected vanilla, sc, sart, sart-noprune)");
    }
    int N = s.policy.N;
    read_int(obj, p, "N", N);
    if (N < 1) {
        throw ConfigError("policy.N", "must be >= 1 (got " + std::to_string(N) + ")");
    }

    PolicyConfig cfg = PolicyConfig::defaults(*policy, N);
    // defaults() normalizes; keep the requested N for the explicit-field checks below.
    cfg.N = *policy == Policy::Vanilla ? 1 : N;
    s.explicit_M = obj.contains("M");
    s.explicit_beta = obj.contains("beta");
    read_int(obj, p, "M", cfg.M);
    read(obj, p, "alpha", cfg.alpha);
    read_int(obj, p, "beta", cfg.beta);
    if (const json* v = find(obj, "aggregation")) {
        if (!v->is_string()) {
            throw ConfigError("policy.aggregation", "expected a string");
        }
        const auto agg = parse_aggregation(v->get<std::string>());
        if (!agg) {
            throw ConfigError("policy.aggregation", "unknown aggregation '" + v->get<std::string>() +
                                                        "' (expected highest_reward, majority_vote, single)");
        }
        cfg.aggregation = *agg;
    }
    // Explicit values are validated as given, before normalization rewrites them.
    if (cfg.policy != Policy::Vanilla) {
        cfg.validate();
    }
    s.policy = cfg.normalized();
}

} // namespace

void Scenario::set_branches(int N) {
    const PolicyConfig d = PolicyConfig::defaults(policy.policy, N);
    policy.N = N;
    if (!explicit_M) {
        policy.M = d.M;
    }
    if (!explicit_beta) {
        policy.beta = d.beta;
    }
    policy = policy.normalized();
}

void Scenario::set_policy(Policy p) {
    const int N = policy.N;
    policy.policy = p;
    policy.aggregation = default_aggregation(p);
    set_branches(N);
}

void Scenario::validate() const {
    if (!(arrival_rate > 0)) {
        throw ConfigError("arrival_rate", "must be > 0");
    }
    if (horizon_ms < 0) {
        throw ConfigError("horizon_ms", "must be >= 0");
    }
    if (trials < 1) {
        throw ConfigError("trials", "must be >= 1");
    }
    workload.validate();
    engine.validate();
    policy.validate();
}

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("<root>", "scenario must be a JSON object");
    }
    reject_unknown(doc, "",
                   {"name", "seed", "arrival_rate", "horizon_ms", "trials", "output_dir", "workload",
                    "engine", "policy"});
    Scenario s;
    read(doc, "", "name", s.name);
    read_int(doc, "", "seed", s.seed);
    read(doc, "", "arrival_rate", s.arrival_rate);
    read_int(doc, "", "horizon_ms", s.horizon_ms);
    read_int(doc, "", "trials", s.trials);
    read(doc, "", "output_dir", s.output_dir);

    const json empty = json::object();
    parse_workload(block(doc, "workload", empty), s.workload);
    parse_engine(block(doc, "engine", empty), s.engine);
    parse_policy_block(block(doc, "policy", empty), s);
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("<file>", "cannot open scenario file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("parse error: ") + e.what());
    }
    return parse_scenario(doc);
}

json to_json(const Scenario& s) {
    const auto& w = s.workload;
    const auto& e = s.engine;
    const auto& p = s.policy;
    json doc = json::object();
    doc["name"] = s.name;
    doc["seed"] = s.seed;
    doc["arrival_rate"] = s.arrival_rate;
    doc["horizon_ms"] = s.horizon_ms;
    doc["trials"] = s.trials;
    doc["output_dir"] = s.output_dir;
    doc["workload"] = {
        {"length_median", w.length_median},
        {"length_sigma_log", w.length_sigma_log},
        {"min_len", w.min_len},
        {"max_len", w.max_len},
        {"difficulty_beta_a", w.difficulty_beta_a},
        {"difficulty_beta_b", w.difficulty_beta_b},
        {"num_wrong_labels", w.num_wrong_labels},
        {"prompt_len_min", w.prompt_len_min},
        {"prompt_len_max", w.prompt_len_max},
        {"reward_correct_mean", w.reward_correct_mean},
        {"reward_correct_sd", w.reward_correct_sd},
        {"reward_incorrect_mean", w.reward_incorrect_mean},
        {"reward_incorrect_sd", w.reward_incorrect_sd},
        {"reward_traj_sd", w.reward_traj_sd},
        {"reward_prior", w.reward_prior},
        {"min_reward_separation", w.min_reward_separation},
    };
    doc["engine"] = {
        {"max_batch", e.max_batch},
        {"chunk_steps", e.chunk_steps},
        {"prefill_ms_per_token", e.prefill_ms_per_token},
        {"step_base_ms", e.step_base_ms},
        {"step_per_branch_ms", e.step_per_branch_ms},
        {"kv_budget", e.kv_budget},
        {"prm_eval_ms", e.prm_eval_ms},
    };
    doc["policy"] = {
        {"name", std::string(to_string(p.policy))},
        {"N", p.N},
        {"M", p.M},
        {"alpha", p.alpha},
        {"beta", p.beta},
        {"aggregation", std::string(to_string(p.aggregation))},
    };
    return doc;
}

} // namespace branchsim
