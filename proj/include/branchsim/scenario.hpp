// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/engine.hpp"
#include "branchsim/scheduler.hpp"
#include "branchsim/workload.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace branchsim {

/// A complete experiment description: the top-level fields plus the
/// "workload", "engine" and "policy" blocks of a scenario file.
struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 42;
    double arrival_rate = 1.0; // requests per second
    Millis horizon_ms = 600'000;
    int trials = 5;
    /// Empty means "use the CLI / environment default".
    std::string output_dir;

    WorkloadConfig workload;
    EngineConfig engine;
    PolicyConfig policy;
    /// Whether M / beta were given explicitly; otherwise they follow N.
    bool explicit_M = false;
    bool explicit_beta = false;

    /// Re-derives M and beta from N unless given explicitly, then normalizes.
    void set_branches(int N);
    void set_policy(Policy p);

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Parses and validates a scenario. Unknown keys and wrongly typed values
/// are rejected with the full field path (e.g. "policy.M").
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical echo of a scenario with every field filled in.
nlohmann::json to_json(const Scenario& s);

} // namespace branchsim
