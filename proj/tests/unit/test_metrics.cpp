// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace branchsim;

namespace {

// Sort then take the ceil(p*n/100)-th value, with the rank computed exactly in
// integers (p given in tenths of a percent).
Millis nearest_rank(std::vector<Millis> v, int p_tenths) {
    std::sort(v.begin(), v.end());
    const auto n = static_cast<std::int64_t>(v.size());
    std::int64_t rank = (p_tenths * n + 999) / 1000;
    rank = std::max<std::int64_t>(rank, 1);
    return v[static_cast<std::size_t>(rank - 1)];
}

RequestRecord rec(std::int64_t id, bool correct) {
    RequestRecord r;
    r.request_id = id;
    r.is_correct = correct;
    return r;
}

} // namespace

TEST(Percentile, SmallExamples) {
    const std::vector<Millis> v{10, 20, 30, 40};
    EXPECT_EQ(percentile(v, 97), 40);
    EXPECT_EQ(percentile(v, 50), 20);
    EXPECT_EQ(percentile(v, 25), 10);
    EXPECT_EQ(percentile(v, 26), 20);
    EXPECT_EQ(percentile(v, 100), 40);
    const std::vector<Millis> one{7};
    EXPECT_EQ(percentile(one, 1), 7);
    EXPECT_EQ(percentile(one, 99), 7);
}

TEST(Percentile, ExactRankOnHundred) {
    std::vector<Millis> v;
    for (int i = 100; i >= 1; --i) {
        v.push_back(i);
    }
    EXPECT_EQ(percentile(v, 97), 97);
    EXPECT_EQ(percentile(v, 99), 99);
    EXPECT_EQ(percentile(v, 50), 50);
}

TEST(Percentile, RejectsBadInput) {
    const std::vector<Millis> empty;
    EXPECT_THROW(percentile(empty, 50), ContractViolation);
    const std::vector<Millis> v{1, 2};
    EXPECT_THROW(percentile(v, 0), ContractViolation);
    EXPECT_THROW(percentile(v, 100.5), ContractViolation);
}

TEST(PercentileProperty, MatchesIntegerRankOracleAndIsMonotone) {
    std::mt19937_64 g(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = std::uniform_int_distribution<int>(1, 300)(g);
        std::vector<Millis> v(static_cast<std::size_t>(n));
        for (auto& x : v) {
            x = std::uniform_int_distribution<Millis>(0, 5000)(g);
        }
        Millis prev = -1;
        for (int p10 = 1; p10 <= 1000; p10 += 7) {
            const Millis got = percentile(v, p10 / 10.0);
            ASSERT_EQ(got, nearest_rank(v, p10)) << "n=" << n << " p=" << p10 / 10.0;
            ASSERT_GE(got, prev);
            prev = got;
        }
        for (int p : {50, 90, 97, 99}) {
            ASSERT_EQ(percentile(v, p), nearest_rank(v, p * 10));
        }
    }
}

TEST(Accuracy, Fraction) {
    const std::vector<RequestRecord> r{rec(0, true), rec(1, false), rec(2, true), rec(3, true)};
    EXPECT_DOUBLE_EQ(accuracy(r), 0.75);
    const std::vector<RequestRecord> none;
    EXPECT_THROW(accuracy(none), ContractViolation);
}

TEST(Occupancy, ExtractsOnlyOccupancyEvents) {
    std::vector<SimEvent> ev;
    SimEvent chunk;
    chunk.kind = EventKind::Chunk;
    chunk.time = 0;
    chunk.batch_size = 3;
    chunk.duration = 40;
    ev.push_back(chunk);
    SimEvent occ;
    occ.kind = EventKind::Occupancy;
    occ.time = 40;
    occ.duration = 40;
    occ.batch_size = 2;
    occ.resident = 900;
    ev.push_back(occ);
    occ.time = 70;
    occ.duration = 30;
    occ.batch_size = 1;
    occ.resident = 500;
    ev.push_back(occ);

    const auto tr = occupancy_trace(ev);
    ASSERT_EQ(tr.size(), 2u);
    EXPECT_EQ(tr[0].time, 40);
    EXPECT_EQ(tr[0].chunk_ms, 40);
    EXPECT_EQ(tr[0].running_branches, 2);
    EXPECT_EQ(tr[0].resident_tokens, 900);
    EXPECT_EQ(tr[1].resident_tokens, 500);
    EXPECT_EQ(time_integrated_tokens(tr), 900 * 40 + 500 * 30);
}

TEST(Summaries, LatenciesAndCompletedLength) {
    std::vector<RequestRecord> rs;
    for (int i = 0; i < 4; ++i) {
        RequestRecord r = rec(i, i % 2 == 0);
        r.arrival_time = 100 * i;
        r.prefill_start = 100 * i + 10 * (i + 1);
        r.finalize_time = r.prefill_start + 1000;
        BranchRecord b;
        b.state = BranchState::Completed;
        b.target_length = 100 * (i + 1);
        r.branches.push_back(b);
        b.state = BranchState::Pruned;
        b.target_length = 99999;
        r.branches.push_back(b);
        rs.push_back(r);
    }
    const std::vector<OccupancySample> occ{{10, 10, 1, 5}, {30, 20, 1, 7}};
    const TrialSummary s = summarize_trial(rs, occ, 2);
    EXPECT_EQ(s.num_requests, 4);
    EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
    EXPECT_EQ(s.queuing.p50, 20);
    EXPECT_EQ(s.queuing.p97, 40);
    EXPECT_DOUBLE_EQ(s.queuing.mean, 25.0);
    EXPECT_EQ(s.inference.p99, 1000);
    EXPECT_EQ(s.e2e.p90, 1040);
    EXPECT_DOUBLE_EQ(s.mean_completed_length, 250.0);
    EXPECT_EQ(s.kv_token_ms, 5 * 10 + 7 * 20);
    EXPECT_EQ(s.audit_failures, 2);
}

TEST(Summaries, EmptyTrial) {
    const TrialSummary s = summarize_trial({}, {}, 0);
    EXPECT_EQ(s.num_requests, 0);
    EXPECT_EQ(s.e2e.p97, 0);
}

TEST(MeanSd, SampleStandardDeviation) {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    const MeanSd m = mean_sd(v);
    EXPECT_DOUBLE_EQ(m.mean, 5.0);
    EXPECT_NEAR(m.sd, std::sqrt(32.0 / 7.0), 1e-12);
    const std::vector<double> one{3.5};
    EXPECT_EQ(mean_sd(one).sd, 0.0);
    EXPECT_EQ(mean_sd({}).mean, 0.0);
}
