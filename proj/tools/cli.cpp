// Copyright (C) 2026 The branchsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "branchsim/orderstats.hpp"
#include "branchsim/runner.hpp"
#include "branchsim/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <optional>
#include <ostream>
#include <sstream>

namespace branchsim::cli {

namespace {

struct CommonOptions {
    std::optional<std::uint64_t> seed;
    std::string out;
    bool events = false;
    bool serial = false;

    ExecMode mode() const { return serial ? ExecMode::Serial : ExecMode::Parallel; }
};

void add_common(CLI::App& cmd, CommonOptions& o) {
    cmd.add_option("--seed", o.seed, "Root seed (overrides the scenario)");
    cmd.add_option("--out", o.out, std::string("Output directory (default: scenario output_dir, $") +
                                       kOutDirEnv + ", or " + kDefaultOutDir + ")");
    cmd.add_flag("--events", o.events, "Also write the full event log of every trial");
    cmd.add_flag("--serial", o.serial, "Run trials one after another");
}

Scenario load(const std::string& file, const CommonOptions& o) {
    Scenario s = load_scenario(file);
    if (o.seed) {
        s.seed = *o.seed;
    }
    return s;
}

void print_aggregate(std::ostream& out, const std::string& title, const Aggregate& agg) {
    out << title << '\n';
    for (const auto& [name, ms] : agg) {
        out << "  " << name << " mean=" << format_double(ms.mean) << " sd=" << format_double(ms.sd)
            << '\n';
    }
}

int audit_exit(std::int64_t failures, std::ostream& err) {
    if (failures != 0) {
        err << "error: " << failures << " KV ledger audit failure(s)\n";
        return kExitAudit;
    }
    return kExitOk;
}

int cmd_run(const std::string& file, const CommonOptions& o, std::ostream& out, std::ostream& err) {
    const Scenario s = load(file, o);
    const auto dir = resolve_output_dir(o.out, s);
    const RunResult r = run_scenario(s, o.mode());
    write_run(r, dir, WriteOptions{o.events});
    print_aggregate(out, s.name + " [" + std::string(to_string(s.policy.policy)) + "] -> " + dir.string(),
                    r.aggregate);
    return audit_exit(r.audit_failures(), err);
}

int cmd_sweep(const std::string& file, const std::string& axis_spec, const std::string& policies_spec,
              const CommonOptions& o, std::ostream& out, std::ostream& err) {
    const Scenario s = load(file, o);
    const SweepAxis axis = parse_axis(axis_spec);
    const std::vector<Policy> policies =
        policies_spec.empty() ? std::vector<Policy>{s.policy.policy} : parse_policies(policies_spec);
    const auto dir = resolve_output_dir(o.out, s);
    const SweepResult r = run_sweep(s, axis, policies, dir, o.mode(), WriteOptions{o.events});
    out << "sweep " << s.name << ": " << r.points.size() << " points x " << s.trials << " trials -> "
        << (dir / "comparison.csv").string() << '\n';
    for (const auto& p : r.points) {
        const auto find = [&](const char* name) {
            for (const auto& [n, ms] : p.aggregate) {
                if (n == name) {
                    return ms.mean;
                }
            }
            return 0.0;
        };
        out << "  " << p.label(axis) << " accuracy=" << format_double(find("accuracy"))
            << " e2e_p97=" << format_double(find("e2e_p97")) << " e2e_p99=" << format_double(find("e2e_p99"))
            << '\n';
    }
    return audit_exit(r.audit_failures(), err);
}

struct OrderStatsOptions {
    OrderStatsSpec spec;
    std::string base = "uniform";
    std::string scenario;
    Tokens stopping_chunk = 0;
};

int cmd_orderstats(OrderStatsOptions& o, const CommonOptions& common, std::ostream& out) {
    if (o.base == "uniform") {
        o.spec.base = OrderStatsBase::Uniform;
    } else if (o.base == "length") {
        o.spec.base = OrderStatsBase::Length;
    } else {
        throw ConfigError("orderstats.base", "expected uniform or length (got '" + o.base + "')");
    }
    if (!o.scenario.empty()) {
        o.spec.workload = load_scenario(o.scenario).workload;
    }
    if (common.seed) {
        o.spec.seed = *common.seed;
    }
    const auto rows = orderstats_table(o.spec, common.mode());
    const std::string csv = orderstats_csv(rows);

    std::string stopping;
    if (o.stopping_chunk > 0) {
        const LengthParams lp = o.spec.workload.length_params();
        const auto cdf = stopping_step_cdf(o.spec.M, o.spec.N, lp, o.stopping_chunk);
        std::ostringstream s;
        s << "steps,cdf\n";
        for (std::size_t k = 0; k < cdf.size(); ++k) {
            s << (static_cast<Tokens>(k) + 1) * o.stopping_chunk << ',' << format_double(cdf[k]) << '\n';
        }
        stopping = s.str();
    }

    if (common.out.empty()) {
        out << csv;
        if (!stopping.empty()) {
            out << '\n' << stopping;
        }
    } else {
        const std::filesystem::path dir = common.out;
        write_file_atomic(dir / "orderstats.csv", csv);
        if (!stopping.empty()) {
            write_file_atomic(dir / "stopping_cdf.csv", stopping);
        }
        out << "wrote " << (dir / "orderstats.csv").string() << '\n';
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Discrete-event simulator of branch-sampling LLM serving schedulers", "branchsim"};
    app.set_version_flag("--version", BRANCHSIM_VERSION);
    app.require_subcommand(1);

    CommonOptions run_opts;
    std::string run_file;
    auto* run_cmd = app.add_subcommand("run", "Run every trial of a scenario");
    run_cmd->add_option("file", run_file, "Scenario file")->required();
    add_common(*run_cmd, run_opts);

    CommonOptions sweep_opts;
    std::string sweep_file;
    std::string axis = "N=1,2,4,8";
    std::string policies;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario over an axis and a set of policies");
    sweep_cmd->add_option("file", sweep_file, "Base scenario file")->required();
    sweep_cmd->add_option("--axis", axis, "Axis and values, e.g. N=1,2,4,8")->capture_default_str();
    sweep_cmd->add_option("--policies", policies,
                          "Comma-separated policies: vanilla, sc, sart, sart-noprune (default: the scenario's)");
    add_common(*sweep_cmd, sweep_opts);

    CommonOptions os_common;
    OrderStatsOptions os;
    auto* os_cmd = app.add_subcommand("orderstats", "Tabulate the order-statistic CDF against Monte Carlo");
    os_cmd->add_option("--M", os.spec.M, "Order (M-th smallest)")->capture_default_str();
    os_cmd->add_option("--N", os.spec.N, "Number of draws")->capture_default_str();
    os_cmd->add_option("--trials", os.spec.trials, "Monte Carlo trials")->capture_default_str();
    os_cmd->add_option("--grid", os.spec.grid, "Evenly spaced grid points over the support")
        ->capture_default_str();
    os_cmd->add_option("--base", os.base, "Base distribution: uniform or length")->capture_default_str();
    os_cmd->add_option("--scenario", os.scenario, "Take the length distribution from this scenario");
    os_cmd->add_option("--stopping-chunk", os.stopping_chunk,
                       "Also tabulate the stopping-step CDF at this chunk size");
    os_cmd->add_option("--seed", os_common.seed, "Monte Carlo seed");
    os_cmd->add_option("--out", os_common.out, "Write CSVs to this directory instead of stdout");
    os_cmd->add_flag("--serial", os_common.serial, "Single-threaded Monte Carlo");

    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd) {
            return cmd_run(run_file, run_opts, out, err);
        }
        if (*sweep_cmd) {
            return cmd_sweep(sweep_file, axis, policies, sweep_opts, out, err);
        }
        if (*os_cmd) {
            return cmd_orderstats(os, os_common, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

} // namespace branchsim::cli
