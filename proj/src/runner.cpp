// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "branchsim/runner.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace branchsim {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

fs::path resolve_output_dir(const std::string& cli_out, const Scenario& s) {
    if (!cli_out.empty()) {
        return cli_out;
    }
    if (!s.output_dir.empty()) {
        return s.output_dir;
    }
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
        return env;
    }
    return kDefaultOutDir;
}

std::uint64_t trial_seed(const Scenario& s, int trial) {
    return s.seed + static_cast<std::uint64_t>(trial);
}

// ---------------------------------------------------------------------------
// Runs

namespace {

struct MetricDef {
    const char* name;
    double (*get)(const TrialSummary&);
};

#define BRANCHSIM_METRIC(name, expr) \
    MetricDef{name, [](const TrialSummary& t) { return static_cast<double>(expr); }}

const MetricDef kMetrics[] = {
    BRANCHSIM_METRIC("num_requests", t.num_requests),
    BRANCHSIM_METRIC("accuracy", t.accuracy),
    BRANCHSIM_METRIC("e2e_p50", t.e2e.p50),
    BRANCHSIM_METRIC("e2e_p90", t.e2e.p90),
    BRANCHSIM_METRIC("e2e_p97", t.e2e.p97),
    BRANCHSIM_METRIC("e2e_p99", t.e2e.p99),
    BRANCHSIM_METRIC("e2e_mean", t.e2e.mean),
    BRANCHSIM_METRIC("queuing_p50", t.queuing.p50),
    BRANCHSIM_METRIC("queuing_p90", t.queuing.p90),
    BRANCHSIM_METRIC("queuing_p97", t.queuing.p97),
    BRANCHSIM_METRIC("queuing_p99", t.queuing.p99),
    BRANCHSIM_METRIC("queuing_mean", t.queuing.mean),
    BRANCHSIM_METRIC("inference_p50", t.inference.p50),
    BRANCHSIM_METRIC("inference_p90", t.inference.p90),
    BRANCHSIM_METRIC("inference_p97", t.inference.p97),
    BRANCHSIM_METRIC("inference_p99", t.inference.p99),
    BRANCHSIM_METRIC("inference_mean", t.inference.mean),
    BRANCHSIM_METRIC("mean_completed_length", t.mean_completed_length),
    BRANCHSIM_METRIC("kv_token_ms", t.kv_token_ms),
};

#undef BRANCHSIM_METRIC

json latency_json(const LatencySummary& l) {
    return {{"p50", l.p50}, {"p90", l.p90}, {"p97", l.p97}, {"p99", l.p99}, {"mean", l.mean}};
}

json trial_summary_json(const TrialSummary& t) {
    return {
        {"num_requests", t.num_requests},
        {"accuracy", t.accuracy},
        {"e2e", latency_json(t.e2e)},
        {"queuing", latency_json(t.queuing)},
        {"inference", latency_json(t.inference)},
        {"mean_completed_length", t.mean_completed_length},
        {"kv_token_ms", t.kv_token_ms},
        {"audit_failures", t.audit_failures},
    };
}

std::string occupancy_csv(std::span<const OccupancySample> trace) {
    std::ostringstream out;
    out << "time_ms,chunk_ms,running_branches,resident_tokens\n";
    for (const auto& o : trace) {
        out << o.time << ',' << o.chunk_ms << ',' << o.running_branches << ',' << o.resident_tokens
            << '\n';
    }
    return out.str();
}

std::string records_jsonl(std::span<const RequestRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += record_json(r).dump();
        out += '\n';
    }
    return out;
}

std::string events_log(std::span<const SimEvent> events) {
    std::string out;
    for (const auto& e : events) {
        out += to_string(e);
        out += '\n';
    }
    return out;
}

fs::path trial_dir(const fs::path& dir, int trial) {
    return dir / ("trial_" + std::to_string(trial));
}

} // namespace

Aggregate aggregate_trials(std::span<const TrialSummary> trials) {
    Aggregate out;
    std::vector<double> values(trials.size());
    for (const auto& m : kMetrics) {
        std::transform(trials.begin(), trials.end(), values.begin(), m.get);
        out.emplace_back(m.name, values.empty() ? MeanSd{} : mean_sd(values));
    }
    return out;
}

std::int64_t RunResult::audit_failures() const {
    std::int64_t n = 0;
    for (const auto& t : trials) {
        n += t.sim.audit_failures;
    }
    return n;
}

TrialResult run_trial(const Scenario& s, int trial) {
    TrialResult t;
    t.trial = trial;
    t.seed = trial_seed(s, trial);
    const auto requests = generate_requests(s.workload, s.arrival_rate, s.horizon_ms, t.seed);
    const auto source = stochastic_branch_source(s.workload, s.engine.chunk_steps, t.seed);
    t.sim = simulate(SimulationConfig{s.engine, s.policy}, requests, source);
    if (!t.sim.records.empty()) {
        t.summary = summarize_trial(t.sim.records, t.sim.occupancy, t.sim.audit_failures);
    } else {
        t.summary.audit_failures = t.sim.audit_failures;
    }
    return t;
}

RunResult run_scenario(const Scenario& s, ExecMode mode) {
    s.validate();
    RunResult r;
    r.scenario = s;
    r.trials.resize(static_cast<std::size_t>(s.trials));
    for_each_index(
        r.trials.size(),
        [&](std::size_t i) { r.trials[i] = run_trial(s, static_cast<int>(i)); }, mode);
    std::vector<TrialSummary> summaries;
    for (const auto& t : r.trials) {
        summaries.push_back(t.summary);
    }
    r.aggregate = aggregate_trials(summaries);
    return r;
}

json metadata_json(const Scenario& s) {
    json seeds = json::array();
    for (int t = 0; t < s.trials; ++t) {
        seeds.push_back(trial_seed(s, t));
    }
    return {
        {"artifact", "branchsim"},
        {"version", BRANCHSIM_VERSION},
        {"seed", s.seed},
        {"trial_seeds", seeds},
        {"prng", std::string(kPrngDescription)},
        {"config", to_json(s)},
    };
}

json record_json(const RequestRecord& r) {
    json branches = json::array();
    for (const auto& b : r.branches) {
        branches.push_back({
            {"index", b.index},
            {"state", std::string(to_string(b.state))},
            {"decoded", b.tokens_decoded},
            {"target", b.target_length},
            {"label", b.answer_label},
            {"reward", b.final_reward},
        });
    }
    return {
        {"id", r.request_id},
        {"arrival", r.arrival_time},
        {"prefill_start", r.prefill_start},
        {"finalize", r.finalize_time},
        {"queuing", r.queuing_latency()},
        {"inference", r.inference_latency()},
        {"e2e", r.e2e_latency()},
        {"correct", r.is_correct},
        {"label", r.final_label},
        {"chosen_branch", r.chosen_branch},
        {"decode_chunks", r.decode_chunks},
        {"kv_token_ms", r.kv_token_ms},
        {"branches", branches},
    };
}

json summary_json(const Scenario& s, std::span<const TrialSummary> trials,
                  std::span<const std::uint64_t> seeds) {
    json per_trial = json::array();
    for (std::size_t i = 0; i < trials.size(); ++i) {
        json t = trial_summary_json(trials[i]);
        t["trial"] = i;
        t["seed"] = i < seeds.size() ? seeds[i] : 0;
        per_trial.push_back(std::move(t));
    }
    json agg = json::object();
    for (const auto& [name, ms] : aggregate_trials(trials)) {
        agg[name] = {{"mean", ms.mean}, {"sd", ms.sd}};
    }
    std::int64_t failures = 0;
    for (const auto& t : trials) {
        failures += t.audit_failures;
    }
    return {
        {"scenario", s.name},
        {"policy", std::string(to_string(s.policy.policy))},
        {"N", s.policy.N},
        {"M", s.policy.M},
        {"alpha", s.policy.alpha},
        {"beta", s.policy.beta},
        {"trials", per_trial},
        {"aggregate", agg},
        {"audit_failures", failures},
    };
}

void write_trial(const Scenario&, const TrialResult& t, const fs::path& dir, const WriteOptions& opts) {
    const fs::path d = trial_dir(dir, t.trial);
    write_file_atomic(d / "records.jsonl", records_jsonl(t.sim.records));
    write_file_atomic(d / "occupancy.csv", occupancy_csv(t.sim.occupancy));
    if (opts.events) {
        write_file_atomic(d / "events.log", events_log(t.sim.events));
    }
}

void write_run_summary(const Scenario& s, std::span<const TrialSummary> trials,
                       std::span<const std::uint64_t> seeds, const fs::path& dir) {
    write_file_atomic(dir / "metadata.json", metadata_json(s).dump(2) + "\n");
    write_file_atomic(dir / "summary.json", summary_json(s, trials, seeds).dump(2) + "\n");
}

void write_run(const RunResult& r, const fs::path& dir, const WriteOptions& opts) {
    std::vector<TrialSummary> summaries;
    std::vector<std::uint64_t> seeds;
    for (const auto& t : r.trials) {
        write_trial(r.scenario, t, dir, opts);
        summaries.push_back(t.summary);
        seeds.push_back(t.seed);
    }
    write_run_summary(r.scenario, summaries, seeds, dir);
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        out.push_back(trim(item));
    }
    return out;
}

bool is_integer_axis(SweepAxisKind k) {
    return k != SweepAxisKind::Alpha && k != SweepAxisKind::Rate;
}

} // namespace

SweepAxis parse_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("sweep.axis", "expected <name>=<v1>,<v2>,... (got '" + spec + "')");
    }
    SweepAxis axis;
    axis.name = trim(spec.substr(0, eq));
    static const std::map<std::string, SweepAxisKind> kinds = {
        {"N", SweepAxisKind::N},         {"M", SweepAxisKind::M},
        {"beta", SweepAxisKind::Beta},   {"alpha", SweepAxisKind::Alpha},
        {"B", SweepAxisKind::MaxBatch},  {"T", SweepAxisKind::ChunkSteps},
        {"rate", SweepAxisKind::Rate},
    };
    const auto it = kinds.find(axis.name);
    if (it == kinds.end()) {
        throw ConfigError("sweep.axis", "unknown axis '" + axis.name +
                                            "' (expected N, M, beta, alpha, B, T or rate)");
    }
    axis.kind = it->second;
    const std::string list = spec.substr(eq + 1);
    for (const auto& item : split(list, ',')) {
        if (item.empty()) {
            if (trim(list).empty()) {
                break;
            }
            throw ConfigError("sweep.axis", "empty value in '" + list + "'");
        }
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size() || !std::isfinite(v)) {
            throw ConfigError("sweep.axis", "bad value '" + item + "'");
        }
        if (is_integer_axis(axis.kind) && v != std::floor(v)) {
            throw ConfigError("sweep.axis", "axis " + axis.name + " takes integers (got '" + item + "')");
        }
        axis.values.push_back(v);
    }
    if (axis.values.empty()) {
        throw ConfigError("sweep.axis", "axis " + axis.name + " has no values");
    }
    return axis;
}

std::vector<Policy> parse_policies(const std::string& spec) {
    std::vector<Policy> out;
    for (const auto& item : split(spec, ',')) {
        if (item.empty()) {
            continue;
        }
        const auto p = parse_policy(item);
        if (!p) {
            throw ConfigError("sweep.policies", "unknown policy '" + item + "'");
        }
        if (std::find(out.begin(), out.end(), *p) == out.end()) {
            out.push_back(*p);
        }
    }
    if (out.empty()) {
        throw ConfigError("sweep.policies", "no policies given");
    }
    return out;
}

void apply_axis(Scenario& s, const SweepAxis& axis, double value) {
    const auto as_int = static_cast<int>(value);
    switch (axis.kind) {
    case SweepAxisKind::N:
        s.set_branches(as_int);
        break;
    case SweepAxisKind::M:
        s.explicit_M = true;
        s.policy.M = as_int;
        s.set_branches(s.policy.N);
        break;
    case SweepAxisKind::Beta:
        s.explicit_beta = true;
        s.policy.beta = as_int;
        s.set_branches(s.policy.N);
        break;
    case SweepAxisKind::Alpha:
        s.policy.alpha = value;
        break;
    case SweepAxisKind::MaxBatch:
        s.engine.max_batch = as_int;
        break;
    case SweepAxisKind::ChunkSteps:
        s.engine.chunk_steps = as_int;
        break;
    case SweepAxisKind::Rate:
        s.arrival_rate = value;
        break;
    }
    s.validate();
}

std::string format_axis_value(double v) {
    return format_double(v);
}

std::string SweepPoint::label(const SweepAxis& axis) const {
    return std::string(to_string(policy)) + "_" + axis.name + format_axis_value(value);
}

std::int64_t SweepResult::audit_failures() const {
    std::int64_t n = 0;
    for (const auto& p : points) {
        n += p.audit_failures;
    }
    return n;
}

SweepResult run_sweep(const Scenario& base, const SweepAxis& axis, std::span<const Policy> policies,
                      const fs::path& out, ExecMode mode, const WriteOptions& opts) {
    if (axis.values.empty()) {
        throw ConfigError("sweep.axis", "axis " + axis.name + " has no values");
    }
    if (policies.empty()) {
        throw ConfigError("sweep.policies", "no policies given");
    }
    SweepResult result;
    result.axis = axis;
    for (Policy p : policies) {
        std::vector<json> seen;
        for (double v : axis.values) {
            SweepPoint point;
            point.policy = p;
            point.value = v;
            point.scenario = base;
            point.scenario.set_policy(p);
            apply_axis(point.scenario, axis, v);
            // Points whose normalized configuration coincides (e.g. Vanilla
            // across N) are run once.
            const json key = to_json(point.scenario);
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
                continue;
            }
            seen.push_back(key);
            result.points.push_back(std::move(point));
        }
    }

    struct Job {
        std::size_t point;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        result.points[i].trials.resize(static_cast<std::size_t>(base.trials));
        for (int t = 0; t < base.trials; ++t) {
            jobs.push_back({i, t});
        }
    }
    std::vector<std::int64_t> failures(jobs.size(), 0);
    for_each_index(
        jobs.size(),
        [&](std::size_t j) {
            SweepPoint& point = result.points[jobs[j].point];
            const TrialResult t = run_trial(point.scenario, jobs[j].trial);
            if (!out.empty()) {
                write_trial(point.scenario, t, out / point.label(axis), opts);
            }
            point.trials[static_cast<std::size_t>(t.trial)] = t.summary;
            failures[j] = t.sim.audit_failures;
        },
        mode);

    for (std::size_t j = 0; j < jobs.size(); ++j) {
        result.points[jobs[j].point].audit_failures += failures[j];
    }
    for (auto& point : result.points) {
        point.aggregate = aggregate_trials(point.trials);
        if (!out.empty()) {
            std::vector<std::uint64_t> seeds;
            for (int t = 0; t < base.trials; ++t) {
                seeds.push_back(trial_seed(point.scenario, t));
            }
            write_run_summary(point.scenario, point.trials, seeds, out / point.label(axis));
        }
    }
    if (!out.empty()) {
        write_file_atomic(out / "comparison.csv", comparison_csv(result));
    }
    return result;
}

std::string comparison_csv(const SweepResult& r) {
    std::ostringstream out;
    out << "policy," << r.axis.name << ",N,M,alpha,beta,trials";
    for (const auto& m : kMetrics) {
        out << ',' << m.name << "_mean," << m.name << "_sd";
    }
    out << ",audit_failures\n";
    for (const auto& p : r.points) {
        const auto& pc = p.scenario.policy;
        out << to_string(p.policy) << ',' << format_axis_value(p.value) << ',' << pc.N << ',' << pc.M
            << ',' << format_double(pc.alpha) << ',' << pc.beta << ',' << p.trials.size();
        for (const auto& [name, ms] : p.aggregate) {
            out << ',' << format_double(ms.mean) << ',' << format_double(ms.sd);
        }
        out << ',' << p.audit_failures << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Order statistics report

void OrderStatsSpec::validate() const {
    if (N < 1) {
        throw ConfigError("orderstats.N", "must be >= 1");
    }
    if (M < 1 || M > N) {
        throw ConfigError("orderstats.M", "must satisfy 1 <= M <= N (got M=" + std::to_string(M) +
                                              ", N=" + std::to_string(N) + ")");
    }
    if (trials < 1) {
        throw ConfigError("orderstats.trials", "must be >= 1");
    }
    if (grid < 2) {
        throw ConfigError("orderstats.grid", "must have at least 2 points");
    }
    if (base == OrderStatsBase::Length) {
        workload.validate();
    }
}

std::vector<OrderStatsRow> orderstats_table(const OrderStatsSpec& spec, ExecMode mode) {
    spec.validate();
    const LengthParams lp = spec.workload.length_params();
    const bool uniform = spec.base == OrderStatsBase::Uniform;
    const double lo = uniform ? 0.0 : static_cast<double>(lp.min_len);
    const double hi = uniform ? 1.0 : static_cast<double>(lp.max_len);

    std::vector<double> xs;
    for (int i = 0; i < spec.grid; ++i) {
        const double x = lo + (hi - lo) * i / (spec.grid - 1);
        xs.push_back(uniform ? x : std::round(x));
    }
    const Sampler sampler = uniform ? uniform_sampler() : length_sampler(lp);
    const auto hits = order_stat_hits(spec.M, spec.N, sampler, xs, spec.trials, spec.seed, mode);

    std::vector<OrderStatsRow> rows;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        OrderStatsRow row;
        row.x = xs[i];
        row.F = uniform ? xs[i] : length_cdf(lp, xs[i]);
        row.analytic = cdf_order_stat(spec.M, spec.N, row.F);
        row.empirical = static_cast<double>(hits[i]) / static_cast<double>(spec.trials);
        row.abs_diff = std::abs(row.analytic - row.empirical);
        rows.push_back(row);
    }
    return rows;
}

std::string orderstats_csv(std::span<const OrderStatsRow> rows) {
    std::ostringstream out;
    out << "x,F,analytic,empirical,abs_diff\n";
    for (const auto& r : rows) {
        out << format_double(r.x) << ',' << format_double(r.F) << ',' << format_double(r.analytic)
            << ',' << format_double(r.empirical) << ',' << format_double(r.abs_diff) << '\n';
    }
    return out.str();
}

} // namespace branchsim
