// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/runner.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace branchsim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const char* env = std::getenv("BRANCHSIM_TEST_TMP");
    const fs::path d = fs::path(env ? env : "/tmp") / "runner" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

Scenario small(Policy p = Policy::SART) {
    Scenario s;
    s.name = "small";
    s.seed = 11;
    s.arrival_rate = 2.0;
    s.horizon_ms = 50'000;
    s.trials = 2;
    s.set_policy(p);
    return s;
}

const MeanSd& metric(const Aggregate& a, const std::string& name) {
    for (const auto& [k, v] : a) {
        if (k == name) {
            return v;
        }
    }
    throw std::out_of_range(name);
}

} // namespace

TEST(Runner, TrialSeedsAndOutputDirPriority) {
    Scenario s = small();
    EXPECT_EQ(trial_seed(s, 0), 11u);
    EXPECT_EQ(trial_seed(s, 3), 14u);

    ::unsetenv(kOutDirEnv);
    EXPECT_EQ(resolve_output_dir("", s), fs::path(kDefaultOutDir));
    ::setenv(kOutDirEnv, "/env/out", 1);
    EXPECT_EQ(resolve_output_dir("", s), fs::path("/env/out"));
    s.output_dir = "/file/out";
    EXPECT_EQ(resolve_output_dir("", s), fs::path("/file/out"));
    EXPECT_EQ(resolve_output_dir("/cli/out", s), fs::path("/cli/out"));
    ::unsetenv(kOutDirEnv);
}

TEST(Runner, VanillaRunWritesOneRecordPerRequest) {
    const Scenario s = small(Policy::Vanilla);
    const RunResult r = run_scenario(s, ExecMode::Serial);
    const fs::path dir = fresh_dir("vanilla");
    write_run(r, dir, WriteOptions{true});

    for (int t = 0; t < s.trials; ++t) {
        const auto expected = generate_requests(s.workload, s.arrival_rate, s.horizon_ms, trial_seed(s, t));
        const fs::path td = dir / ("trial_" + std::to_string(t));
        const auto recs = lines(slurp(td / "records.jsonl"));
        ASSERT_EQ(recs.size(), expected.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const json j = json::parse(recs[i]);
            EXPECT_EQ(j["id"], static_cast<std::int64_t>(i));
            EXPECT_EQ(j["arrival"], expected[i].arrival_time);
            EXPECT_EQ(j["e2e"], j["queuing"].get<std::int64_t>() + j["inference"].get<std::int64_t>());
            EXPECT_EQ(j["branches"].size(), 1u);
        }
        const auto occ = lines(slurp(td / "occupancy.csv"));
        ASSERT_FALSE(occ.empty());
        EXPECT_EQ(occ[0], "time_ms,chunk_ms,running_branches,resident_tokens");
        EXPECT_EQ(static_cast<std::int64_t>(occ.size()) - 1, r.trials[t].sim.chunks);
        EXPECT_TRUE(fs::exists(td / "events.log"));
    }

    const json meta = json::parse(slurp(dir / "metadata.json"));
    EXPECT_EQ(meta["seed"], 11);
    EXPECT_EQ(meta["trial_seeds"], json({11, 12}));
    EXPECT_EQ(meta["config"], to_json(s));
    const json sum = json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(sum["audit_failures"], 0);
    EXPECT_EQ(sum["trials"].size(), 2u);
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        EXPECT_NE(e.path().extension(), ".tmp") << e.path();
    }
}

TEST(Runner, AggregateMatchesPerTrialSummaries) {
    const RunResult r = run_scenario(small(), ExecMode::Serial);
    ASSERT_EQ(r.trials.size(), 2u);
    const double a = r.trials[0].summary.e2e.p97;
    const double b = r.trials[1].summary.e2e.p97;
    const MeanSd& m = metric(r.aggregate, "e2e_p97");
    EXPECT_DOUBLE_EQ(m.mean, (a + b) / 2);
    EXPECT_NEAR(m.sd, std::abs(a - b) / std::sqrt(2.0), 1e-9 * std::max(1.0, std::abs(a - b)));
    EXPECT_EQ(r.audit_failures(), 0);
}

TEST(Runner, SerialAndParallelOutputsAreByteIdentical) {
    const Scenario s = small();
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    write_run(run_scenario(s, ExecMode::Serial), a, WriteOptions{true});
    write_run(run_scenario(s, ExecMode::Parallel), b, WriteOptions{true});
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) {
            continue;
        }
        const fs::path rel = fs::relative(e.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
        ++files;
    }
    EXPECT_EQ(files, 2u + 2u * 3u);
}

TEST(Sweep, ParsesAxesAndPolicies) {
    const SweepAxis ax = parse_axis("N=1,2,4,8");
    EXPECT_EQ(ax.kind, SweepAxisKind::N);
    EXPECT_EQ(ax.values, (std::vector<double>{1, 2, 4, 8}));
    EXPECT_EQ(parse_axis("beta=0,2").kind, SweepAxisKind::Beta);
    EXPECT_EQ(parse_axis("rate=0.5,1").values, (std::vector<double>{0.5, 1}));
    for (const char* bad : {"", "N=", "N", "Q=1", "N=1.5", "N=a", "alpha=0.1,,0.2"}) {
        try {
            parse_axis(bad);
            ADD_FAILURE() << "accepted '" << bad << "'";
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.field(), "sweep.axis");
        }
    }
    EXPECT_EQ(parse_policies("sart,sc,vanilla"),
              (std::vector<Policy>{Policy::SART, Policy::SelfConsistency, Policy::Vanilla}));
    EXPECT_THROW(parse_policies("sart,nope"), ConfigError);
    EXPECT_THROW(parse_policies(""), ConfigError);
}

TEST(Sweep, ApplyAxisRevalidates) {
    Scenario s = small();
    apply_axis(s, parse_axis("N=16"), 16);
    EXPECT_EQ(s.policy.N, 16);
    EXPECT_EQ(s.policy.M, 8);
    apply_axis(s, parse_axis("M=2"), 2);
    EXPECT_EQ(s.policy.M, 2);
    apply_axis(s, parse_axis("N=4"), 4);
    EXPECT_EQ(s.policy.M, 2);
    try {
        apply_axis(s, parse_axis("M=9"), 9);
        ADD_FAILURE();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "policy.M");
    }
}

TEST(Sweep, PointsLabelsAndComparisonTable) {
    Scenario s = small();
    s.horizon_ms = 15'000;
    const SweepAxis ax = parse_axis("N=2,4");
    const std::vector<Policy> pols{Policy::SART, Policy::Vanilla};
    const fs::path out = fresh_dir("sweep");
    const SweepResult r = run_sweep(s, ax, pols, out, ExecMode::Serial);
    // Vanilla ignores N and is run once.
    ASSERT_EQ(r.points.size(), 3u);
    EXPECT_EQ(r.points[0].label(ax), "sart_N2");
    EXPECT_EQ(r.points[1].label(ax), "sart_N4");
    EXPECT_EQ(r.audit_failures(), 0);
    for (const auto& p : r.points) {
        EXPECT_TRUE(fs::exists(out / p.label(ax) / "summary.json")) << p.label(ax);
        EXPECT_TRUE(fs::exists(out / p.label(ax) / "trial_1" / "records.jsonl"));
    }
    const auto csv = lines(slurp(out / "comparison.csv"));
    ASSERT_EQ(csv.size(), 4u);
    EXPECT_EQ(csv[0].rfind("policy,N,N,M,alpha,beta,trials,num_requests_mean,num_requests_sd", 0), 0u);
    EXPECT_EQ(csv[1].rfind("sart,2,2,1,", 0), 0u);
    EXPECT_EQ(csv, lines(comparison_csv(r)));

    // A sweep point equals a plain run of the same scenario.
    Scenario same = s;
    apply_axis(same, ax, 4);
    const RunResult direct = run_scenario(same, ExecMode::Serial);
    EXPECT_EQ(metric(direct.aggregate, "e2e_p97").mean, metric(r.points[1].aggregate, "e2e_p97").mean);
}

TEST(OrderStats, UniformTable) {
    OrderStatsSpec spec;
    const auto rows = orderstats_table(spec, ExecMode::Serial);
    ASSERT_EQ(rows.size(), 11u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_DOUBLE_EQ(rows[i].x, rows[i].F);
        EXPECT_LT(rows[i].abs_diff, 0.01);
        EXPECT_DOUBLE_EQ(rows[i].analytic, cdf_order_stat(4, 8, rows[i].F));
        if (i > 0) {
            EXPECT_GE(rows[i].analytic, rows[i - 1].analytic);
            EXPECT_GE(rows[i].empirical, rows[i - 1].empirical);
        }
    }
    EXPECT_EQ(rows.front().empirical, 0.0);
    EXPECT_EQ(rows.back().empirical, 1.0);
    const auto csv = lines(orderstats_csv(rows));
    EXPECT_EQ(csv.size(), 12u);
    EXPECT_EQ(csv[0], "x,F,analytic,empirical,abs_diff");
}

TEST(OrderStats, SingleDrawReproducesBaseCdf) {
    OrderStatsSpec spec;
    spec.M = 1;
    spec.N = 1;
    spec.base = OrderStatsBase::Length;
    spec.trials = 20'000;
    for (const auto& r : orderstats_table(spec, ExecMode::Serial)) {
        EXPECT_DOUBLE_EQ(r.analytic, r.F);
        EXPECT_LT(r.abs_diff, 4.0 * std::sqrt(0.25 / spec.trials) + 1e-12);
    }
}

TEST(OrderStats, SpecValidation) {
    OrderStatsSpec spec;
    spec.M = 9;
    try {
        spec.validate();
        ADD_FAILURE();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "orderstats.M");
    }
    spec = {};
    spec.grid = 1;
    EXPECT_THROW(spec.validate(), ConfigError);
    spec = {};
    spec.trials = 0;
    EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(format_double(0.30000000000000004), "0.30000000000000004");
}
