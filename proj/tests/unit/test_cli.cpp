// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "branchsim/runner.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace branchsim;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "branchsim");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const char* env = std::getenv("BRANCHSIM_TEST_TMP");
    const fs::path d = fs::path(env ? env : "/tmp") / "cli" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_scenario(const fs::path& dir, const std::string& body) {
    const fs::path p = dir / "s.json";
    std::ofstream(p) << body;
    return p;
}

const char* kTiny = R"({
  "name": "tiny",
  "seed": 5,
  "arrival_rate": 1.0,
  "horizon_ms": 10000,
  "trials": 2,
  // comments are allowed
  "policy": {"name": "sart", "N": 4}
})";

} // namespace

TEST(Cli, VersionAndHelp) {
    const auto v = invoke({"--version"});
    EXPECT_EQ(v.code, cli::kExitOk);
    EXPECT_NE(v.out.find(BRANCHSIM_VERSION), std::string::npos);
    EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
    EXPECT_EQ(invoke({"run", "--help"}).code, cli::kExitOk);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(invoke({}).code, cli::kExitConfig);
    EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitConfig);
    EXPECT_EQ(invoke({"run"}).code, cli::kExitConfig);
    EXPECT_EQ(invoke({"orderstats", "--M", "x"}).code, cli::kExitConfig);
}

TEST(Cli, RunWritesArtifacts) {
    const fs::path d = fresh_dir("run");
    const auto s = write_scenario(d, kTiny);
    const auto r = invoke({"run", s.string(), "--out", (d / "out").string(), "--events", "--serial"});
    EXPECT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("e2e_p97"), std::string::npos);
    EXPECT_TRUE(fs::exists(d / "out" / "summary.json"));
    EXPECT_TRUE(fs::exists(d / "out" / "trial_1" / "events.log"));
}

TEST(Cli, SeedOverride) {
    const fs::path d = fresh_dir("seed");
    const auto s = write_scenario(d, kTiny);
    ASSERT_EQ(invoke({"run", s.string(), "--out", (d / "o").string(), "--seed", "77"}).code, 0);
    std::ifstream in(d / "o" / "metadata.json");
    const auto meta = nlohmann::json::parse(in);
    EXPECT_EQ(meta["seed"], 77);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    const fs::path d = fresh_dir("env");
    const auto s = write_scenario(d, kTiny);
    ::setenv(kOutDirEnv, (d / "from_env").string().c_str(), 1);
    const auto r = invoke({"run", s.string()});
    ::unsetenv(kOutDirEnv);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(d / "from_env" / "summary.json"));
}

TEST(Cli, ConfigErrorsNameTheField) {
    const fs::path d = fresh_dir("bad");
    const auto s = write_scenario(d, R"({"policy": {"name": "sart", "N": 4, "M": 5}})");
    const auto r = invoke({"run", s.string(), "--out", (d / "o").string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("policy.M"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(d / "o"));

    const auto missing = invoke({"run", (d / "nope.json").string()});
    EXPECT_EQ(missing.code, cli::kExitConfig);

    const auto good = write_scenario(d, kTiny);
    const auto axis = invoke({"sweep", good.string(), "--axis", "N=", "--out", (d / "o2").string()});
    EXPECT_EQ(axis.code, cli::kExitConfig);
    EXPECT_NE(axis.err.find("sweep.axis"), std::string::npos);
}

TEST(Cli, SweepWritesComparison) {
    const fs::path d = fresh_dir("sweep");
    const auto s = write_scenario(d, kTiny);
    const auto r = invoke({"sweep", s.string(), "--axis", "N=2,4", "--policies", "sart,sart-noprune", "--out",
                           (d / "o").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(d / "o" / "comparison.csv"));
    EXPECT_TRUE(fs::exists(d / "o" / "sart-noprune_N4" / "summary.json"));
}

TEST(Cli, OrderStatsToStdoutAndFiles) {
    const auto r = invoke({"orderstats", "--M", "2", "--N", "3", "--trials", "5000", "--grid", "5"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("x,F,analytic,empirical,abs_diff\n", 0), 0u);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);

    const fs::path d = fresh_dir("os");
    const auto f = invoke({"orderstats", "--base", "length", "--stopping-chunk", "400", "--trials", "2000",
                           "--out", d.string()});
    EXPECT_EQ(f.code, 0) << f.err;
    EXPECT_TRUE(fs::exists(d / "orderstats.csv"));
    EXPECT_TRUE(fs::exists(d / "stopping_cdf.csv"));

    const auto bad = invoke({"orderstats", "--M", "5", "--N", "3"});
    EXPECT_EQ(bad.code, cli::kExitConfig);
    EXPECT_NE(bad.err.find("orderstats.M"), std::string::npos);
    EXPECT_EQ(invoke({"orderstats", "--base", "beta"}).code, cli::kExitConfig);
}
