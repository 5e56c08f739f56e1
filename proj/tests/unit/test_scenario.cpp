// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace branchsim;
using nlohmann::json;

namespace {

std::string error_field(const json& doc) {
    try {
        parse_scenario(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

std::filesystem::path tmp_dir() {
    const char* env = std::getenv("BRANCHSIM_TEST_TMP");
    auto dir = std::filesystem::path(env ? env : "/tmp") / "scenario";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST(Scenario, EmptyDocumentGivesDefaults) {
    const Scenario s = parse_scenario(json::object());
    EXPECT_EQ(s.seed, 42u);
    EXPECT_EQ(s.trials, 5);
    EXPECT_EQ(s.policy.policy, Policy::SART);
    EXPECT_EQ(s.policy.N, 8);
    EXPECT_EQ(s.policy.M, 4);
    EXPECT_EQ(s.policy.beta, 4);
    EXPECT_EQ(s.engine.max_batch, 64);
    EXPECT_EQ(s.engine.chunk_steps, 400);
}

TEST(Scenario, PolicyFieldsDeriveFromN) {
    const Scenario s = parse_scenario(json{{"policy", {{"name", "sart"}, {"N", 16}}}});
    EXPECT_EQ(s.policy.N, 16);
    EXPECT_EQ(s.policy.M, 8);
    EXPECT_EQ(s.policy.beta, 8);
    EXPECT_FALSE(s.explicit_M);
}

TEST(Scenario, VanillaIsForcedToOneBranch) {
    const Scenario s = parse_scenario(json{{"policy", {{"name", "vanilla"}, {"N", 8}}}});
    EXPECT_EQ(s.policy.N, 1);
    EXPECT_EQ(s.policy.M, 1);
    EXPECT_EQ(s.policy.aggregation, Aggregation::Single);
}

TEST(Scenario, SelfConsistencyWaitsForAll) {
    const Scenario s = parse_scenario(json{{"policy", {{"name", "sc"}, {"N", 6}}}});
    EXPECT_EQ(s.policy.M, 6);
    EXPECT_EQ(s.policy.beta, 0);
    EXPECT_EQ(s.policy.aggregation, Aggregation::MajorityVote);
}

TEST(Scenario, ErrorsNameTheField) {
    EXPECT_EQ(error_field(json{{"policy", {{"N", 4}, {"M", 5}}}}), "policy.M");
    EXPECT_EQ(error_field(json{{"policy", {{"foo", 1}}}}), "policy.foo");
    EXPECT_EQ(error_field(json{{"bogus", 1}}), "bogus");
    EXPECT_EQ(error_field(json{{"policy", {{"name", "greedy"}}}}), "policy.name");
    EXPECT_EQ(error_field(json{{"policy", {{"alpha", 1.5}}}}), "policy.alpha");
    EXPECT_EQ(error_field(json{{"engine", {{"max_batch", 0}}}}), "engine.max_batch");
    EXPECT_EQ(error_field(json{{"engine", {{"chunk_steps", "x"}}}}), "engine.chunk_steps");
    EXPECT_EQ(error_field(json{{"engine", {{"chunk_steps", 2.5}}}}), "engine.chunk_steps");
    EXPECT_EQ(error_field(json{{"workload", {{"min_len", 10}, {"max_len", 5}}}}).rfind("workload.", 0),
              0u);
    EXPECT_EQ(error_field(json{{"arrival_rate", 0}}), "arrival_rate");
    EXPECT_EQ(error_field(json{{"horizon_ms", -1}}), "horizon_ms");
    EXPECT_EQ(error_field(json{{"trials", 0}}), "trials");
    EXPECT_EQ(error_field(json{{"engine", 3}}), "engine");
    EXPECT_EQ(error_field(json::array()), "<root>") ;
}

TEST(Scenario, JsonRoundTrip) {
    Scenario s;
    s.name = "rt";
    s.seed = 123;
    s.arrival_rate = 2.5;
    s.engine.max_batch = 32;
    s.workload.length_median = 5000;
    s.policy.alpha = 0.4;
    s.policy.N = 6;
    s.policy.M = 2;
    s.policy.beta = 1;
    const json j = to_json(s);
    const Scenario back = parse_scenario(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.policy.M, 2);
    EXPECT_EQ(back.engine.max_batch, 32);
}

TEST(Scenario, SetBranchesKeepsExplicitFields) {
    Scenario s = parse_scenario(json{{"policy", {{"N", 8}, {"M", 2}}}});
    EXPECT_TRUE(s.explicit_M);
    s.set_branches(4);
    EXPECT_EQ(s.policy.M, 2);
    EXPECT_EQ(s.policy.beta, 2);
    s.set_policy(Policy::SelfConsistency);
    EXPECT_EQ(s.policy.M, 4);
}

TEST(Scenario, LoadsShippedFilesAndReportsParseErrors) {
    for (const char* f : {"rate1_small.json", "rate4_small.json", "rate1_large.json", "rate4_large.json"}) {
        const Scenario s = load_scenario(std::filesystem::path(BRANCHSIM_SCENARIO_DIR) / f);
        EXPECT_EQ(s.policy.policy, Policy::SART) << f;
        EXPECT_EQ(s.trials, 5) << f;
    }
    const auto bad = tmp_dir() / "bad.json";
    std::ofstream(bad) << "{ \"seed\": ";
    EXPECT_THROW(load_scenario(bad), ConfigError);
    EXPECT_THROW(load_scenario(tmp_dir() / "missing.json"), ConfigError);
}
