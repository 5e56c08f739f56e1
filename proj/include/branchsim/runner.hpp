// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "branchsim/kernels.hpp"
#include "branchsim/metrics.hpp"
#include "branchsim/scenario.hpp"
#include "branchsim/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace branchsim {

/// Environment variable consulted for the output directory when neither
/// --out nor the scenario's output_dir is set.
inline constexpr const char* kOutDirEnv = "BRANCHSIM_OUT_DIR";
inline constexpr const char* kDefaultOutDir = "branchsim-out";

/// --out, then scenario.output_dir, then $BRANCHSIM_OUT_DIR, then "branchsim-out".
std::filesystem::path resolve_output_dir(const std::string& cli_out, const Scenario& s);

/// Trial t of a scenario uses root seed `seed + t`.
std::uint64_t trial_seed(const Scenario& s, int trial);

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    SimulationResult sim;
    TrialSummary summary;
};

/// Metric name -> mean and sd over trials, in a fixed order.
using Aggregate = std::vector<std::pair<std::string, MeanSd>>;

Aggregate aggregate_trials(std::span<const TrialSummary> trials);

struct RunResult {
    Scenario scenario;
    std::vector<TrialResult> trials;
    Aggregate aggregate;

    std::int64_t audit_failures() const;
};

/// One seeded simulation of the scenario's workload.
TrialResult run_trial(const Scenario& s, int trial);

/// All trials of a scenario; trials run concurrently in Parallel mode.
RunResult run_scenario(const Scenario& s, ExecMode mode = ExecMode::Parallel);

struct WriteOptions {
    /// Also write the full event log per trial.
    bool events = false;
};

/// Writes metadata.json, summary.json and per-trial records.jsonl and
/// occupancy.csv (plus events.log on request) under `dir`. Every file is
/// written to a temporary name first and then renamed into place.
void write_trial(const Scenario& s, const TrialResult& t, const std::filesystem::path& dir,
                 const WriteOptions& opts = {});
void write_run_summary(const Scenario& s, std::span<const TrialSummary> trials,
                       std::span<const std::uint64_t> seeds, const std::filesystem::path& dir);
void write_run(const RunResult& r, const std::filesystem::path& dir, const WriteOptions& opts = {});

nlohmann::json metadata_json(const Scenario& s);
nlohmann::json summary_json(const Scenario& s, std::span<const TrialSummary> trials,
                            std::span<const std::uint64_t> seeds);
nlohmann::json record_json(const RequestRecord& r);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxisKind { N, M, Beta, Alpha, MaxBatch, ChunkSteps, Rate };

struct SweepAxis {
    SweepAxisKind kind = SweepAxisKind::N;
    std::string name;
    std::vector<double> values;
};

/// Parses "N=1,2,4,8". Recognized axes: N, M, beta, alpha, B, T, rate.
/// Throws ConfigError("sweep.axis") on malformed or empty input.
SweepAxis parse_axis(const std::string& spec);

/// Parses "sart,sc,vanilla". Throws ConfigError("sweep.policies").
std::vector<Policy> parse_policies(const std::string& spec);

/// Applies one axis value to a scenario and re-validates it.
void apply_axis(Scenario& s, const SweepAxis& axis, double value);

std::string format_axis_value(double v);

struct SweepPoint {
    Policy policy = Policy::SART;
    double value = 0.0;
    Scenario scenario;
    std::vector<TrialSummary> trials;
    Aggregate aggregate;
    std::int64_t audit_failures = 0;

    /// Subdirectory name, e.g. "sart_N8".
    std::string label(const SweepAxis& axis) const;
};

struct SweepResult {
    SweepAxis axis;
    std::vector<SweepPoint> points;

    std::int64_t audit_failures() const;
};

/// Every (policy x axis value) point, each with the base scenario's trials.
/// Runs are scheduled as independent (point, trial) jobs. Vanilla ignores the
/// N axis and is run once. When `out` is non-empty each run is written to
/// out/<label>/ as it finishes and comparison.csv is written at the end.
SweepResult run_sweep(const Scenario& base, const SweepAxis& axis, std::span<const Policy> policies,
                      const std::filesystem::path& out, ExecMode mode = ExecMode::Parallel,
                      const WriteOptions& opts = {});

/// Comparison table keyed by (policy, axis value): one row per point with the
/// mean and sd of every aggregate metric.
std::string comparison_csv(const SweepResult& r);

// ---------------------------------------------------------------------------
// Order statistics report

enum class OrderStatsBase { Uniform, Length };

struct OrderStatsSpec {
    int M = 4;
    int N = 8;
    std::int64_t trials = 100'000;
    /// Number of evenly spaced grid points (>= 2) over the base support.
    int grid = 11;
    std::uint64_t seed = 0x5eed;
    OrderStatsBase base = OrderStatsBase::Uniform;
    /// Used by the Length base.
    WorkloadConfig workload;

    /// Throws ConfigError naming "orderstats.<field>".
    void validate() const;
};

struct OrderStatsRow {
    double x = 0.0;
    double F = 0.0;
    double analytic = 0.0;
    double empirical = 0.0;
    double abs_diff = 0.0;
};

std::vector<OrderStatsRow> orderstats_table(const OrderStatsSpec& spec, ExecMode mode = ExecMode::Parallel);

/// Columns x,F,analytic,empirical,abs_diff.
std::string orderstats_csv(std::span<const OrderStatsRow> rows);

/// Atomic file write (temporary file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip decimal form of a double, as used in CSV output.
std::string format_double(double v);

} // namespace branchsim
