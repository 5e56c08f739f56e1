// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace branchsim {

std::vector<OccupancySample> occupancy_trace(std::span<const SimEvent> events) {
    std::vector<OccupancySample> out;
    for (const auto& e : events) {
        if (e.kind == EventKind::Occupancy) {
            out.push_back(OccupancySample{e.time, e.duration, e.batch_size, e.resident});
        }
    }
    return out;
}

Millis percentile(std::span<const Millis> values, double p) {
    require(!values.empty(), "percentile: empty sample");
    require(p > 0.0 && p <= 100.0, "percentile: p must lie in (0, 100]");
    const auto n = static_cast<double>(values.size());
    // The epsilon absorbs representation error in p (e.g. 97 * n / 100).
    auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0 - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    std::vector<Millis> sorted(values.begin(), values.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     sorted.end());
    return sorted[rank - 1];
}

double accuracy(std::span<const RequestRecord> records) {
    require(!records.empty(), "accuracy: empty sample");
    const auto correct = std::count_if(records.begin(), records.end(),
                                       [](const RequestRecord& r) { return r.is_correct; });
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::int64_t time_integrated_tokens(std::span<const OccupancySample> trace) {
    std::int64_t total = 0;
    for (const auto& s : trace) {
        total += s.resident_tokens * s.chunk_ms;
    }
    return total;
}

LatencySummary summarize_latencies(std::span<const Millis> values) {
    LatencySummary s;
    if (values.empty()) {
        return s;
    }
    s.p50 = percentile(values, 50);
    s.p90 = percentile(values, 90);
    s.p97 = percentile(values, 97);
    s.p99 = percentile(values, 99);
    long double sum = 0;
    for (Millis v : values) {
        sum += v;
    }
    s.mean = static_cast<double>(sum / static_cast<long double>(values.size()));
    return s;
}

TrialSummary summarize_trial(std::span<const RequestRecord> records,
                             std::span<const OccupancySample> occupancy,
                             std::int64_t audit_failures) {
    TrialSummary s;
    s.num_requests = static_cast<std::int64_t>(records.size());
    s.audit_failures = audit_failures;
    s.kv_token_ms = time_integrated_tokens(occupancy);
    if (records.empty()) {
        return s;
    }
    std::vector<Millis> e2e, queuing, inference;
    e2e.reserve(records.size());
    queuing.reserve(records.size());
    inference.reserve(records.size());
    double completed_len = 0;
    std::int64_t completed = 0;
    for (const auto& r : records) {
        e2e.push_back(r.e2e_latency());
        queuing.push_back(r.queuing_latency());
        inference.push_back(r.inference_latency());
        for (const auto& b : r.branches) {
            if (b.state == BranchState::Completed) {
                completed_len += static_cast<double>(b.target_length);
                ++completed;
            }
        }
    }
    s.accuracy = accuracy(records);
    s.e2e = summarize_latencies(e2e);
    s.queuing = summarize_latencies(queuing);
    s.inference = summarize_latencies(inference);
    s.mean_completed_length = completed > 0 ? completed_len / static_cast<double>(completed) : 0.0;
    return s;
}

MeanSd mean_sd(std::span<const double> values) {
    MeanSd out;
    if (values.empty()) {
        return out;
    }
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) {
            ss += (v - out.mean) * (v - out.mean);
        }
        out.sd = std::sqrt(ss / (n - 1));
    }
    return out;
}

} // namespace branchsim
