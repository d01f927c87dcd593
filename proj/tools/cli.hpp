#pragma once

// Command-line front end: gen-trace, simulate, train, report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "catsim/config.hpp"
#include "catsim/predictor.hpp"
#include "catsim/reporting.hpp"
#include "catsim/simulator.hpp"
#include "catsim/trace.hpp"

namespace catsim::cli {

namespace fs = std::filesystem;

/// Diagnostic logger on stderr. CAT_SCHED_LOG selects the level
/// (trace, debug, info, warn, error, off); default warn.
inline std::shared_ptr<spdlog::logger> logger() {
    static auto log = [] {
        auto l = spdlog::stderr_color_mt("catsim");
        l->set_pattern("[%l] %v");
        auto level = spdlog::level::warn;
        if (const char* env = std::getenv("CAT_SCHED_LOG"); env && *env) {
            level = spdlog::level::from_str(env);
            // from_str maps unknown names to off
            if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::warn;
        }
        l->set_level(level);
        return l;
    }();
    return log;
}

/// Writes one artifact; throws if the file cannot be written completely.
template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    fn(out);
    out.flush();
    if (!out) throw Error("failed writing '" + path.string() + "'");
    logger()->info("wrote {}", path.string());
}

inline fs::path artifact(const fs::path& dir, const std::string& experiment, const std::string& name) {
    return dir / (experiment + "_" + name + ".csv");
}

/// Summary, DMR table and binned series for a set of reports.
inline void write_aggregates(const fs::path& dir, const std::string& experiment, std::span<const RunReport> reports,
                             std::span<const double> deadlines, const std::map<BinIndicator, double>& bin_widths) {
    const auto stats = summarize(reports);
    write_file(artifact(dir, experiment, "summary"), [&](std::ostream& o) { write_summary_csv(o, stats); });
    const auto table = dmr_table(reports, deadlines);
    write_file(artifact(dir, experiment, "dmr"), [&](std::ostream& o) { write_dmr_csv(o, table); });
    const auto records = all_records(reports);
    std::vector<BinnedSeries> series;
    for (const auto& [ind, width] : bin_widths) series.push_back(binned_correlation(records, ind, width));
    write_file(artifact(dir, experiment, "binned"), [&](std::ostream& o) { write_binned_csv(o, series); });
}

struct GenTraceArgs {
    std::string profile = "suburban";
    double duration = 3600.0;
    double sample_period = 1.0;
    std::uint64_t seed = 1;
    std::string out;
};

inline int gen_trace(const GenTraceArgs& a) {
    auto profile = profiles::by_name(a.profile);
    if (!profile) throw Error("unknown profile '" + a.profile + "'");
    const auto trace = generate_synthetic_trace(*profile, a.duration, a.sample_period, a.seed);
    write_file(a.out, [&](std::ostream& o) { write_trace_csv(trace, o); });
    logger()->info("{} samples, {} s", trace.size(), trace.duration());
    return 0;
}

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::size_t jobs = 1;
};

inline int simulate(const SimulateArgs& a) {
    auto cfg = load_config(a.config);
    if (a.seed) cfg.evaluation.base_seed = *a.seed;
    if (a.out) cfg.evaluation.output_dir = *a.out;
    const auto traces = materialize_traces(cfg);
    const auto policies = build_policies(cfg);
    logger()->info("{} policies x {} traces x {} runs", policies.size(), traces.size(), cfg.evaluation.runs);

    const auto reports = sweep(policies, traces, cfg.evaluation.runs, cfg.evaluation.base_seed, cfg.sensor, a.jobs);
    for (const auto& r : reports) {
        logger()->debug("{} on {} run {}: {} transfers, mean goodput {:.3f}", r.policy, r.trace, r.run,
                        r.records.size(), r.mean_goodput());
        if (r.truncated) logger()->debug("{} on {} run {}: truncated at trace end", r.policy, r.trace, r.run);
    }

    const auto& dir = cfg.evaluation.output_dir;
    const auto& exp = cfg.evaluation.experiment;
    write_aggregates(dir, exp, reports, cfg.evaluation.deadlines, cfg.evaluation.bin_widths);
    write_file(artifact(dir, exp, "transfers"), [&](std::ostream& o) { write_transfer_log_csv(o, reports); });

    std::set<std::string> used;
    for (const auto& p : cfg.policies) used.insert(p.metrics.begin(), p.metrics.end());
    write_file(artifact(dir, exp, "curves"), [&](std::ostream& o) {
        o << kCurveHeader << '\n';
        for (const auto& name : used) {
            const auto& def = cfg.metrics.at(name);
            write_analytic_curve_rows(o, def, export_analytic_curve(def, cfg.evaluation.curve_samples));
        }
    });
    return 0;
}

struct TrainArgs {
    std::string dataset;
    std::string learner = "model_tree";
    std::size_t folds = 10;
    std::uint64_t seed = 1;
    std::string out;
    std::size_t min_leaf = 0;
    bool use_speed = false;
};

inline int train(const TrainArgs& a, std::ostream& out) {
    auto learner = learner_from_string(a.learner);
    if (!learner) throw Error("unknown learner '" + a.learner + "'");
    std::ifstream in(a.dataset);
    if (!in) throw Error("cannot open dataset '" + a.dataset + "'");
    const auto data = read_dataset_csv(in);
    if (data.size() < a.folds)
        throw Error("dataset has " + std::to_string(data.size()) + " samples, fewer than " + std::to_string(a.folds) +
                    " folds");
    TrainOptions opt;
    opt.use_speed = a.use_speed;
    opt.min_leaf_size = a.min_leaf;
    const auto cv = cross_validate(data, a.folds, *learner, a.seed, opt);
    const auto& m = cv.metrics;
    out << "learner " << to_string(*learner) << '\n';
    out << "samples " << data.size() << '\n';
    out << "folds " << a.folds << '\n';
    out << "correlation " << (m.correlation ? csv::format_double(*m.correlation) : std::string("undefined")) << '\n';
    out << "mae " << csv::format_double(m.mae) << '\n';
    out << "rmse " << csv::format_double(m.rmse) << '\n';
    const auto model = catsim::train(*learner, data, opt);
    if (const auto* lin = std::get_if<LinearModel>(&model); lin && !lin->dropped.empty())
        logger()->warn("linear model: {} rank-deficient column(s) dropped", lin->dropped.size());
    if (!a.out.empty()) write_file(a.out, [&](std::ostream& o) { write_model(o, model); });
    return 0;
}

struct ReportArgs {
    std::vector<std::string> logs;
    std::string out = ".";
    std::string experiment = "report";
    std::vector<double> deadlines = default_deadlines();
};

inline int report(const ReportArgs& a) {
    if (a.logs.empty()) throw Error("report: at least one transfer log is required");
    std::vector<RunReport> reports;
    for (const auto& path : a.logs) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open log '" + path + "'");
        std::vector<RunReport> part;
        try {
            part = read_transfer_log_csv(in);
        } catch (const Error& e) {
            throw Error(path + ": " + e.what());
        }
        reports.insert(reports.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    if (reports.empty()) throw Error("report: logs contain no transfers");
    write_aggregates(a.out, a.experiment, reports, a.deadlines, EvaluationConfig{}.bin_widths);
    return 0;
}

/// Parses and dispatches. Returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Channel-aware transmission scheduling simulator"};
    app.require_subcommand(1);

    GenTraceArgs gt;
    auto* gen = app.add_subcommand("gen-trace", "Generate a synthetic channel trace");
    gen->add_option("--profile", gt.profile, "Track profile (suburban, highway)")->capture_default_str();
    gen->add_option("--duration", gt.duration, "Trace duration in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--sample-period", gt.sample_period, "Sample period in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--seed", gt.seed, "Random seed")->capture_default_str();
    gen->add_option("--out", gt.out, "Output CSV path")->required();

    SimulateArgs sim;
    auto* simc = app.add_subcommand("simulate", "Run a policy sweep from a JSON config");
    simc->add_option("--config", sim.config, "Experiment config (JSON)")->required();
    simc->add_option("--seed", sim.seed, "Override evaluation.base_seed");
    simc->add_option("--out", sim.out, "Override evaluation.output_dir");
    simc->add_option("--jobs", sim.jobs, "Concurrent simulation workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    TrainArgs tr;
    auto* trc = app.add_subcommand("train", "Cross-validate and train a data-rate predictor");
    trc->add_option("dataset", tr.dataset, "Dataset CSV (transfer log or measurements)")->required();
    trc->add_option("--learner", tr.learner, "model_tree or linear")
        ->check(CLI::IsMember({"model_tree", "linear"}))
        ->capture_default_str();
    trc->add_option("--folds", tr.folds, "Cross-validation folds")->check(CLI::Range(2, 1 << 30))->capture_default_str();
    trc->add_option("--seed", tr.seed, "Shuffle seed")->capture_default_str();
    trc->add_option("--out", tr.out, "Model output path");
    trc->add_option("--min-leaf", tr.min_leaf, "Minimum samples per leaf (default 2 x features)");
    trc->add_flag("--use-speed", tr.use_speed, "Include vehicle speed as a feature");

    ReportArgs rp;
    auto* rpc = app.add_subcommand("report", "Aggregate transfer logs into summary artifacts");
    rpc->add_option("logs", rp.logs, "Transfer log CSVs");
    rpc->add_option("--out", rp.out, "Output directory")->capture_default_str();
    rpc->add_option("--experiment", rp.experiment, "Artifact name prefix")->capture_default_str();
    rpc->add_option("--deadlines", rp.deadlines, "Deadlines in seconds")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version exit 0; any other parse failure is a usage error.
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (*gen) return gen_trace(gt);
        if (*simc) return simulate(sim);
        if (*trc) return train(tr, out);
        if (*rpc) {
            if (rp.logs.empty()) {
                err << "error: report needs at least one transfer log\n" << rpc->help();
                return 2;
            }
            return report(rp);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace catsim::cli
