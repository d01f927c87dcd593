#pragma once

// Experiment configuration loaded from a JSON document with the sections
// sensor, timing, metrics, policies, trace and evaluation. Every section and
// field is optional; omitted values fall back to the reference scenario.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "catsim/error.hpp"
#include "catsim/metrics.hpp"
#include "catsim/predictor.hpp"
#include "catsim/reporting.hpp"
#include "catsim/simulator.hpp"
#include "catsim/trace.hpp"

namespace catsim {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Seed offsets relative to evaluation.base_seed.
inline constexpr std::uint64_t kTraceSeedOffset = 10'000;  // synthetic trace i uses base + offset + i

struct TraceSource {
    std::string name;
    std::optional<std::filesystem::path> file;  // set for measured traces
    std::string profile = "suburban";
    double duration = 3600.0;
    double sample_period = 1.0;
    std::optional<std::uint64_t> seed;  // overrides the derived seed
};

struct PolicySpec {
    std::string name;
    PolicyKind kind = PolicyKind::periodic;
    std::vector<std::string> metrics;
    std::vector<double> weights;
    std::optional<std::filesystem::path> model;
};

struct EvaluationConfig {
    std::string experiment = "experiment";
    std::size_t runs = 20;
    std::uint64_t base_seed = 1;
    std::vector<double> deadlines = default_deadlines();
    std::map<BinIndicator, double> bin_widths = {
        {BinIndicator::rsrp, 2.0}, {BinIndicator::rsrq, 1.0},  {BinIndicator::snr, 2.0},
        {BinIndicator::cqi, 1.0},  {BinIndicator::speed, 5.0}, {BinIndicator::payload_mb, 0.5}};
    std::size_t curve_samples = 101;
    std::filesystem::path output_dir = ".";
};

struct ExperimentConfig {
    SensorConfig sensor;
    std::vector<double> t_min = {10.0, 30.0};
    double t_max = 120.0;
    double t_decision = 1.0;
    std::map<std::string, MetricDefinition> metrics;
    std::vector<PolicySpec> policies;
    std::vector<TraceSource> traces;
    EvaluationConfig evaluation;

    void validate() const;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : obj.items()) {
        bool known = false;
        for (auto key : keys) known = known || key == k;
        if (!known) throw ConfigError(where + "." + k + ": unknown field");
    }
}

inline double get_number(const json& obj, const std::string& key, const std::string& where, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline std::uint64_t get_count(const json& obj, const std::string& key, const std::string& where,
                               std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& where,
                              std::string fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline std::vector<double> get_numbers(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(where + ": expected a number or an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + ": expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::map<std::string, MetricDefinition> builtin_metrics() {
    std::map<std::string, MetricDefinition> out;
    for (auto m : default_metrics::all()) out[m.name] = m;
    auto p15 = default_metrics::predicted_rate(15.0);
    p15.name = "predicted_rate_15";
    out[p15.name] = p15;
    return out;
}

inline std::vector<PolicySpec> default_policies() {
    std::vector<PolicySpec> out;
    out.push_back({"periodic", PolicyKind::periodic, {}, {}, std::nullopt});
    for (const char* m : {"rsrp", "rsrq", "snr", "cqi"})
        out.push_back({m, PolicyKind::single_metric, {m}, {}, std::nullopt});
    const std::vector<std::string> all = {"rsrp", "rsrq", "snr", "cqi"};
    out.push_back({"optimistic", PolicyKind::optimistic, all, {}, std::nullopt});
    out.push_back({"pessimistic", PolicyKind::pessimistic, all, {}, std::nullopt});
    out.push_back({"weighted_mean", PolicyKind::weighted_mean, all, {1.0, 1.0, 1.0, 1.0}, std::nullopt});
    return out;
}

inline std::vector<TraceSource> default_traces() {
    TraceSource sub;
    sub.name = "suburban";
    TraceSource hwy;
    hwy.name = "highway";
    hwy.profile = "highway";
    return {sub, hwy};
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

inline MetricDefinition parse_metric(const json& j, const std::string& name, const std::string& where,
                                     const std::map<std::string, MetricDefinition>& builtin) {
    reject_unknown(j, where, {"indicator", "phi_min", "phi_max", "alpha", "polarity"});
    MetricDefinition m;
    if (auto it = builtin.find(name); it != builtin.end()) m = it->second;
    m.name = name;
    const auto ind_name = get_string(j, "indicator", where, std::string(to_string(m.indicator)));
    if (!j.contains("indicator") && !builtin.contains(name))
        throw ConfigError(where + ".indicator: required for a new metric");
    auto ind = indicator_from_string(ind_name);
    if (!ind) throw ConfigError(where + ".indicator: unknown indicator '" + ind_name + "'");
    m.indicator = *ind;
    m.phi_min = get_number(j, "phi_min", where, m.phi_min);
    m.phi_max = get_number(j, "phi_max", where, m.phi_max);
    m.alpha = get_number(j, "alpha", where, m.alpha);
    const auto pol = get_string(j, "polarity", where, m.polarity == Polarity::conducive ? "conducive" : "harmful");
    if (pol == "conducive")
        m.polarity = Polarity::conducive;
    else if (pol == "harmful")
        m.polarity = Polarity::harmful;
    else
        throw ConfigError(where + ".polarity: expected 'conducive' or 'harmful', got '" + pol + "'");
    try {
        m.validate();
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return m;
}

inline PolicySpec parse_policy(const json& j, const std::string& where, const std::filesystem::path& base) {
    reject_unknown(j, where, {"name", "kind", "metrics", "weights", "model"});
    PolicySpec p;
    if (!j.contains("kind")) throw ConfigError(where + ".kind: required");
    const auto kind = get_string(j, "kind", where, "");
    auto k = policy_kind_from_string(kind);
    if (!k) throw ConfigError(where + ".kind: unknown policy kind '" + kind + "'");
    p.kind = *k;
    p.name = get_string(j, "name", where, kind);
    if (p.name.empty() || p.name.find_first_of(",\n") != std::string::npos)
        throw ConfigError(where + ".name: must be non-empty and contain no commas");
    if (j.contains("metrics")) {
        const auto& ms = j.at("metrics");
        if (ms.is_string())
            p.metrics.push_back(ms.get<std::string>());
        else if (ms.is_array())
            for (const auto& m : ms) {
                if (!m.is_string()) throw ConfigError(where + ".metrics: expected metric names");
                p.metrics.push_back(m.get<std::string>());
            }
        else
            throw ConfigError(where + ".metrics: expected a name or an array of names");
    } else if (p.kind == PolicyKind::single_metric) {
        p.metrics.push_back(p.name);
    } else if (p.kind == PolicyKind::predicted_rate) {
        p.metrics.push_back("predicted_rate");
    } else if (p.kind != PolicyKind::periodic) {
        p.metrics = {"rsrp", "rsrq", "snr", "cqi"};
    }
    if (j.contains("weights")) p.weights = get_numbers(j.at("weights"), where + ".weights");
    if (p.kind == PolicyKind::weighted_mean && p.weights.empty()) p.weights.assign(p.metrics.size(), 1.0);
    if (j.contains("model")) p.model = resolve(base, get_string(j, "model", where, ""));
    if (p.kind == PolicyKind::predicted_rate && !p.model) throw ConfigError(where + ".model: required for predicted_rate");
    return p;
}

inline TraceSource parse_trace(const json& j, const std::string& where, const std::filesystem::path& base,
                               std::size_t index) {
    reject_unknown(j, where, {"name", "file", "profile", "duration", "sample_period", "seed"});
    TraceSource t;
    if (j.contains("file")) {
        t.file = resolve(base, get_string(j, "file", where, ""));
        if (j.contains("profile") || j.contains("duration") || j.contains("sample_period") || j.contains("seed"))
            throw ConfigError(where + ": 'file' cannot be combined with synthetic trace fields");
    }
    t.profile = get_string(j, "profile", where, t.profile);
    if (!t.file && !profiles::by_name(t.profile)) throw ConfigError(where + ".profile: unknown profile '" + t.profile + "'");
    t.duration = get_number(j, "duration", where, t.duration);
    t.sample_period = get_number(j, "sample_period", where, t.sample_period);
    if (j.contains("seed")) t.seed = get_count(j, "seed", where, 0);
    const auto fallback = t.file ? t.file->stem().string() : t.profile + (index ? "_" + std::to_string(index) : "");
    t.name = get_string(j, "name", where, fallback);
    if (t.name.empty() || t.name.find_first_of(",\n") != std::string::npos)
        throw ConfigError(where + ".name: must be non-empty and contain no commas");
    return t;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
    try {
        sensor.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("sensor: ") + e.what());
    }
    if (t_min.empty()) throw ConfigError("timing.t_min: at least one value required");
    for (double tm : t_min) {
        try {
            TimingConfig{tm, t_max, t_decision}.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("timing: ") + e.what());
        }
    }
    if (policies.empty()) throw ConfigError("policies: at least one policy required");
    std::set<std::string> names;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        const auto& p = policies[i];
        const auto where = "policies[" + std::to_string(i) + "]";
        if (!names.insert(p.name).second) throw ConfigError(where + ".name: duplicate policy name '" + p.name + "'");
        for (const auto& m : p.metrics)
            if (!metrics.contains(m)) throw ConfigError(where + ".metrics: unknown metric '" + m + "'");
    }
    if (traces.empty()) throw ConfigError("trace: at least one trace source required");
    std::set<std::string> trace_names;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& t = traces[i];
        const auto where = "trace[" + std::to_string(i) + "]";
        if (!trace_names.insert(t.name).second) throw ConfigError(where + ".name: duplicate trace name '" + t.name + "'");
        if (!t.file && !(t.sample_period > 0.0 && t.duration >= t.sample_period))
            throw ConfigError(where + ": need duration >= sample_period > 0");
    }
    if (evaluation.runs == 0) throw ConfigError("evaluation.runs: must be >= 1");
    for (std::size_t i = 1; i < evaluation.deadlines.size(); ++i)
        if (!(evaluation.deadlines[i] > evaluation.deadlines[i - 1]))
            throw ConfigError("evaluation.deadlines: must be strictly increasing");
    for (const auto& [b, w] : evaluation.bin_widths)
        if (!(w > 0.0)) throw ConfigError("evaluation.bin_widths." + std::string(to_string(b)) + ": must be > 0");
    if (evaluation.curve_samples < 2) throw ConfigError("evaluation.curve_samples: must be >= 2");
    if (evaluation.experiment.empty() || evaluation.experiment.find('/') != std::string::npos)
        throw ConfigError("evaluation.experiment: must be a non-empty file name prefix");
}

/// `base` resolves relative file paths (trace files, models); normally the
/// directory holding the config file.
inline ExperimentConfig parse_config(const nlohmann::json& root, const std::filesystem::path& base = {}) {
    using detail::get_count;
    using detail::get_number;
    using detail::get_string;
    using detail::reject_unknown;

    detail::reject_unknown(root, "config", {"sensor", "timing", "metrics", "policies", "trace", "evaluation"});
    ExperimentConfig cfg;

    if (root.contains("sensor")) {
        const auto& s = root.at("sensor");
        reject_unknown(s, "sensor", {"frequency_hz", "payload_bytes"});
        cfg.sensor.frequency = get_number(s, "frequency_hz", "sensor", cfg.sensor.frequency);
        cfg.sensor.payload_size = get_number(s, "payload_bytes", "sensor", cfg.sensor.payload_size);
    }

    if (root.contains("timing")) {
        const auto& t = root.at("timing");
        reject_unknown(t, "timing", {"t_min", "t_max", "t_decision"});
        if (t.contains("t_min")) cfg.t_min = detail::get_numbers(t.at("t_min"), "timing.t_min");
        cfg.t_max = get_number(t, "t_max", "timing", cfg.t_max);
        cfg.t_decision = get_number(t, "t_decision", "timing", cfg.t_decision);
    }

    const auto builtin = detail::builtin_metrics();
    cfg.metrics = builtin;
    if (root.contains("metrics")) {
        const auto& ms = root.at("metrics");
        if (!ms.is_object()) throw ConfigError("metrics: expected an object keyed by metric name");
        for (const auto& [name, def] : ms.items())
            cfg.metrics[name] = detail::parse_metric(def, name, "metrics." + name, builtin);
    }

    if (root.contains("policies")) {
        const auto& ps = root.at("policies");
        if (!ps.is_array()) throw ConfigError("policies: expected an array");
        for (std::size_t i = 0; i < ps.size(); ++i)
            cfg.policies.push_back(detail::parse_policy(ps[i], "policies[" + std::to_string(i) + "]", base));
    } else {
        cfg.policies = detail::default_policies();
    }

    if (root.contains("trace")) {
        const auto& tr = root.at("trace");
        if (tr.is_array()) {
            for (std::size_t i = 0; i < tr.size(); ++i)
                cfg.traces.push_back(detail::parse_trace(tr[i], "trace[" + std::to_string(i) + "]", base, i));
        } else {
            cfg.traces.push_back(detail::parse_trace(tr, "trace", base, 0));
        }
    } else {
        cfg.traces = detail::default_traces();
    }

    if (root.contains("evaluation")) {
        const auto& e = root.at("evaluation");
        reject_unknown(e, "evaluation",
                       {"experiment", "runs", "base_seed", "deadlines", "bin_widths", "curve_samples", "output_dir"});
        auto& ev = cfg.evaluation;
        ev.experiment = get_string(e, "experiment", "evaluation", ev.experiment);
        ev.runs = get_count(e, "runs", "evaluation", ev.runs);
        ev.base_seed = get_count(e, "base_seed", "evaluation", ev.base_seed);
        if (e.contains("deadlines")) ev.deadlines = detail::get_numbers(e.at("deadlines"), "evaluation.deadlines");
        if (e.contains("bin_widths")) {
            const auto& bw = e.at("bin_widths");
            if (!bw.is_object()) throw ConfigError("evaluation.bin_widths: expected an object");
            for (const auto& [k, v] : bw.items()) {
                auto b = bin_indicator_from_string(k);
                if (!b) throw ConfigError("evaluation.bin_widths." + k + ": unknown indicator");
                if (!v.is_number()) throw ConfigError("evaluation.bin_widths." + k + ": expected a number");
                ev.bin_widths[*b] = v.get<double>();
            }
        }
        ev.curve_samples = get_count(e, "curve_samples", "evaluation", ev.curve_samples);
        if (e.contains("output_dir"))
            ev.output_dir = detail::resolve(base, get_string(e, "output_dir", "evaluation", ""));
    }

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return parse_config(root, path.parent_path());
}

inline std::uint64_t trace_seed(const ExperimentConfig& cfg, std::size_t index) {
    const auto& t = cfg.traces.at(index);
    return t.seed ? *t.seed : cfg.evaluation.base_seed + kTraceSeedOffset + index;
}

/// Loads or generates every trace source.
inline std::vector<NamedTrace> materialize_traces(const ExperimentConfig& cfg, const IndicatorModel& model = {}) {
    std::vector<NamedTrace> out;
    for (std::size_t i = 0; i < cfg.traces.size(); ++i) {
        const auto& src = cfg.traces[i];
        if (src.file) {
            std::ifstream in(*src.file);
            if (!in) throw Error("cannot open trace file '" + src.file->string() + "'");
            try {
                out.push_back({src.name, parse_trace_csv(in)});
            } catch (const Error& e) {
                throw Error("trace file '" + src.file->string() + "': " + e.what());
            }
        } else {
            out.push_back({src.name, generate_synthetic_trace(*profiles::by_name(src.profile), src.duration,
                                                              src.sample_period, trace_seed(cfg, i), model)});
        }
    }
    return out;
}

/// Expands policy specs over the configured t_min values. With more than one
/// t_min the label gets a "_t<t_min>" suffix so results stay separable.
inline std::vector<PolicyConfig> build_policies(const ExperimentConfig& cfg) {
    std::map<std::filesystem::path, std::shared_ptr<const Regressor>> models;
    std::vector<PolicyConfig> out;
    for (double tm : cfg.t_min) {
        for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
            const auto& spec = cfg.policies[i];
            PolicyConfig p;
            p.name = cfg.t_min.size() > 1 ? spec.name + "_t" + csv::format_double(tm) : spec.name;
            p.kind = spec.kind;
            for (const auto& m : spec.metrics) p.metrics.push_back(cfg.metrics.at(m));
            p.weights = spec.weights;
            p.timing = {tm, cfg.t_max, cfg.t_decision};
            if (spec.model) {
                auto& slot = models[*spec.model];
                if (!slot) {
                    std::ifstream in(*spec.model);
                    if (!in) throw Error("cannot open model file '" + spec.model->string() + "'");
                    slot = std::make_shared<const Regressor>(read_model(in));
                }
                p.model = slot;
            }
            try {
                p.validate();
            } catch (const Error& e) {
                throw ConfigError("policies[" + std::to_string(i) + "]: " + e.what());
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace catsim
