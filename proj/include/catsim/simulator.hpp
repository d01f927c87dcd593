#pragma once

// Discrete-time simulation of a buffering sensor uploader driven by a channel
// trace and a transmission policy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "catsim/error.hpp"
#include "catsim/metrics.hpp"
#include "catsim/predictor.hpp"
#include "catsim/random.hpp"
#include "catsim/trace.hpp"

namespace catsim {

/// Fixed per-transfer protocol overhead in bytes.
inline constexpr double kOverheadBytes = 250'000.0;

/// Goodput for a transfer of `bytes` payload: capacity * bytes / (bytes + overhead).
inline double effective_goodput(double capacity, double bytes) {
    if (!(capacity >= 0.0)) throw Error("effective_goodput: capacity must be >= 0");
    if (!(bytes > 0.0)) throw Error("effective_goodput: bytes must be > 0");
    return capacity * bytes / (bytes + kOverheadBytes);
}

struct SensorConfig {
    double frequency = 1.0;        // Hz
    double payload_size = 50'000;  // bytes per reading

    void validate() const {
        if (!(frequency > 0.0)) throw Error("sensor: frequency must be > 0");
        if (!(payload_size > 0.0)) throw Error("sensor: payload size must be > 0");
    }
};

enum class PolicyKind { periodic, single_metric, optimistic, pessimistic, weighted_mean, predicted_rate };

inline std::string_view to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::periodic: return "periodic";
        case PolicyKind::single_metric: return "single_metric";
        case PolicyKind::optimistic: return "optimistic";
        case PolicyKind::pessimistic: return "pessimistic";
        case PolicyKind::weighted_mean: return "weighted_mean";
        case PolicyKind::predicted_rate: return "predicted_rate";
    }
    return "?";
}

inline std::optional<PolicyKind> policy_kind_from_string(std::string_view s) {
    for (auto k : {PolicyKind::periodic, PolicyKind::single_metric, PolicyKind::optimistic, PolicyKind::pessimistic,
                   PolicyKind::weighted_mean, PolicyKind::predicted_rate})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

struct PolicyConfig {
    std::string name;
    PolicyKind kind = PolicyKind::periodic;
    std::vector<MetricDefinition> metrics;
    std::vector<double> weights;
    TimingConfig timing;
    std::shared_ptr<const Regressor> model;  // predicted_rate only

    std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }

    void validate() const {
        timing.validate();
        for (const auto& m : metrics) m.validate();
        const auto who = "policy '" + label() + "': ";
        switch (kind) {
            case PolicyKind::periodic: break;
            case PolicyKind::single_metric:
                if (metrics.size() != 1) throw Error(who + "single_metric requires exactly one metric");
                break;
            case PolicyKind::optimistic:
            case PolicyKind::pessimistic:
                if (metrics.empty()) throw Error(who + "combinator requires at least one metric");
                break;
            case PolicyKind::weighted_mean:
                if (metrics.empty()) throw Error(who + "combinator requires at least one metric");
                CombinerConfig{CombineStrategy::weighted_mean, weights}.validate(metrics.size());
                break;
            case PolicyKind::predicted_rate:
                if (!model) throw Error(who + "predicted_rate requires a trained model");
                if (metrics.size() != 1 || metrics[0].indicator != Indicator::predicted_rate)
                    throw Error(who + "predicted_rate requires exactly one predicted_rate metric");
                if (metrics[0].phi_max != 15.0 && metrics[0].phi_max != 18.0)
                    throw Error(who + "predicted_rate metric phi_max must be 15 or 18 MBit/s");
                break;
        }
        if (kind != PolicyKind::predicted_rate)
            for (const auto& m : metrics)
                if (m.indicator == Indicator::predicted_rate)
                    throw Error(who + "predicted_rate metric is only valid for the predicted_rate policy");
    }
};

enum class Trigger { probabilistic, forced_t_max, periodic };

inline std::string_view to_string(Trigger t) {
    switch (t) {
        case Trigger::probabilistic: return "probabilistic";
        case Trigger::forced_t_max: return "forced_t_max";
        case Trigger::periodic: return "periodic";
    }
    return "?";
}

inline std::optional<Trigger> trigger_from_string(std::string_view s) {
    for (auto t : {Trigger::probabilistic, Trigger::forced_t_max, Trigger::periodic})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

struct TransmissionRecord {
    double start = 0.0;  // s
    double end = 0.0;    // s
    double bytes = 0.0;
    double goodput = 0.0;  // MBit/s
    std::vector<double> packet_generation_times;
    Trigger trigger = Trigger::probabilistic;
    ChannelSample at_start;  // indicators observed when the transfer began

    double duration() const { return end - start; }
};

struct RunReport {
    std::string policy;
    PolicyKind kind = PolicyKind::periodic;
    double t_min = 0.0;
    std::string trace;
    std::size_t run = 0;
    std::uint64_t seed = 0;

    std::vector<TransmissionRecord> records;
    std::vector<double> ages;  // s, per delivered packet
    std::size_t generated_packets = 0;
    std::size_t pending_packets = 0;  // still buffered or in a truncated transfer at trace end
    bool truncated = false;           // a transfer was cut off by the end of the trace

    double mean_goodput() const {
        if (records.empty()) return 0.0;
        double s = 0.0;
        for (const auto& r : records) s += r.goodput;
        return s / static_cast<double>(records.size());
    }

    double median_goodput() const {
        if (records.empty()) return 0.0;
        std::vector<double> g;
        g.reserve(records.size());
        for (const auto& r : records) g.push_back(r.goodput);
        std::sort(g.begin(), g.end());
        const auto n = g.size();
        return n % 2 ? g[n / 2] : 0.5 * (g[n / 2 - 1] + g[n / 2]);
    }

    std::size_t delivered_packets() const { return ages.size(); }
};

/// Fraction of ages strictly above the deadline.
inline double compute_dmr(std::span<const double> ages, double deadline) {
    if (ages.empty()) throw Error("compute_dmr: no packet ages");
    const auto missed = std::count_if(ages.begin(), ages.end(), [&](double a) { return a > deadline; });
    return static_cast<double>(missed) / static_cast<double>(ages.size());
}

inline double compute_dmr(const RunReport& report, double deadline) { return compute_dmr(report.ages, deadline); }

inline std::map<double, double> dmr_by_deadline(const RunReport& report, std::span<const double> deadlines) {
    std::map<double, double> out;
    for (double d : deadlines) out[d] = compute_dmr(report, d);
    return out;
}

inline double indicator_value(const ChannelSample& s, Indicator ind) {
    switch (ind) {
        case Indicator::rsrp: return s.rsrp;
        case Indicator::rsrq: return s.rsrq;
        case Indicator::snr: return s.snr;
        case Indicator::cqi: return s.cqi;
        case Indicator::predicted_rate: break;
    }
    throw Error("indicator_value: predicted_rate is not a trace indicator");
}

inline FeatureVector features_of(const ChannelSample& s, double payload_bytes) {
    return {s.rsrp, s.rsrq, s.snr, static_cast<double>(s.cqi), payload_bytes, s.speed};
}

/// Capacity cap used when a real trace carries no capacity column.
inline constexpr double kFallbackCapMax = 20.0;

inline double capacity_of(const ChannelSample& s) {
    return s.capacity ? *s.capacity : latent_capacity(s.snr, kFallbackCapMax);
}

/// Probability of transmitting at this decision tick for a probabilistic policy.
inline double policy_probability(const PolicyConfig& policy, const ChannelSample& s, double delta_t,
                                 double buffer_bytes) {
    const auto& timing = policy.timing;
    if (policy.kind == PolicyKind::predicted_rate) {
        const double rate = predict(*policy.model, features_of(s, buffer_bytes));
        return transmission_probability(policy.metrics[0], rate, delta_t, timing);
    }
    std::vector<double> p;
    p.reserve(policy.metrics.size());
    for (const auto& m : policy.metrics)
        p.push_back(transmission_probability(m, indicator_value(s, m.indicator), delta_t, timing));
    switch (policy.kind) {
        case PolicyKind::single_metric: return p.front();
        case PolicyKind::optimistic: return combine_optimistic(p);
        case PolicyKind::pessimistic: return combine_pessimistic(p);
        case PolicyKind::weighted_mean: return combine_weighted_mean(p, policy.weights);
        default: break;
    }
    throw Error("policy_probability: not a probabilistic policy");
}

/// Runs one policy over one trace. Decisions are taken every t_decision
/// seconds; the whole buffer is sent as one transfer whose rate is frozen at
/// the capacity observed at its start. Elapsed time is measured from the end
/// of the previous transfer (or the trace start).
inline RunReport run_simulation(const PolicyConfig& policy, const SensorConfig& sensor, const ChannelTrace& trace,
                                std::uint64_t seed) {
    policy.validate();
    sensor.validate();
    if (trace.empty()) throw Error("run_simulation: empty trace");
    const auto& timing = policy.timing;
    if (trace.duration() < 2.0 * timing.t_max)
        throw Error("run_simulation: trace shorter than 2 * t_max");

    Rng rng(seed);
    RunReport rep;
    rep.policy = policy.label();
    rep.kind = policy.kind;
    rep.t_min = timing.t_min;
    rep.seed = seed;

    const double t0 = trace.start_time();
    const double t_end = trace.end_time();
    const double gen_period = 1.0 / sensor.frequency;
    std::size_t next_packet = 0;
    auto generation_time = [&](std::size_t k) { return t0 + static_cast<double>(k) * gen_period; };

    std::deque<double> buffer;
    std::optional<TransmissionRecord> in_flight;
    double last_end = t0;

    auto complete = [&] {
        for (double g : in_flight->packet_generation_times) rep.ages.push_back(in_flight->end - g);
        last_end = in_flight->end;
        rep.records.push_back(std::move(*in_flight));
        in_flight.reset();
    };

    for (std::size_t tick = 0;; ++tick) {
        const double t = t0 + static_cast<double>(tick) * timing.t_decision;
        if (t > t_end) break;
        if (in_flight && in_flight->end <= t) complete();
        while (generation_time(next_packet) <= t) buffer.push_back(generation_time(next_packet++));
        if (in_flight || buffer.empty()) continue;

        const double delta_t = t - last_end;
        const double bytes = static_cast<double>(buffer.size()) * sensor.payload_size;
        const auto& sample = sample_at(trace, t);
        Trigger trigger;
        if (policy.kind == PolicyKind::periodic) {
            if (delta_t < timing.t_min) continue;
            trigger = Trigger::periodic;
        } else {
            const double p = policy_probability(policy, sample, delta_t, bytes);
            if (!bernoulli_decide(p, rng)) continue;
            trigger = delta_t > timing.t_max ? Trigger::forced_t_max : Trigger::probabilistic;
        }

        const double goodput = effective_goodput(capacity_of(sample), bytes);
        const double end = goodput > 0.0 ? t + bytes * 8e-6 / goodput : INFINITY;
        if (!(end <= t_end)) {
            rep.truncated = true;
            break;
        }
        TransmissionRecord rec;
        rec.start = t;
        rec.end = end;
        rec.bytes = bytes;
        rec.goodput = goodput;
        rec.packet_generation_times.assign(buffer.begin(), buffer.end());
        rec.trigger = trigger;
        rec.at_start = sample;
        buffer.clear();
        in_flight = std::move(rec);
    }
    if (in_flight) complete();  // ends within the trace, after the last tick
    while (generation_time(next_packet) <= t_end) buffer.push_back(generation_time(next_packet++));
    rep.pending_packets = buffer.size();
    rep.generated_packets = next_packet;
    return rep;
}

/// Training samples from completed transfers: start-time indicators plus
/// payload size as features, achieved goodput as label.
inline std::vector<LabeledSample> dataset_from_reports(std::span<const RunReport> reports) {
    std::vector<LabeledSample> out;
    for (const auto& r : reports)
        for (const auto& rec : r.records) out.push_back({features_of(rec.at_start, rec.bytes), rec.goodput});
    return out;
}

/// Named trace for sweeps.
struct NamedTrace {
    std::string name;
    ChannelTrace trace;
};

/// One report per (policy, trace, run), policy-major, with seed = base_seed + run.
/// `jobs` > 1 runs simulations concurrently; output order is unaffected.
inline std::vector<RunReport> sweep(std::span<const PolicyConfig> policies, std::span<const NamedTrace> traces,
                                    std::size_t runs_per_pair, std::uint64_t base_seed, const SensorConfig& sensor,
                                    std::size_t jobs = 1) {
    if (policies.empty() || traces.empty() || runs_per_pair == 0) throw Error("sweep: empty input");
    struct Task {
        std::size_t policy, trace, run;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < policies.size(); ++p)
        for (std::size_t t = 0; t < traces.size(); ++t)
            for (std::size_t r = 0; r < runs_per_pair; ++r) tasks.push_back({p, t, r});

    std::vector<RunReport> out(tasks.size());
    auto run_one = [&](std::size_t i) {
        const auto& task = tasks[i];
        out[i] = run_simulation(policies[task.policy], sensor, traces[task.trace].trace, base_seed + task.run);
        out[i].trace = traces[task.trace].name;
        out[i].run = task.run;
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_one(i);
        return out;
    }
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < jobs; ++w)
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < tasks.size(); i += jobs) run_one(i);
        }));
    for (auto& f : workers) f.get();
    return out;
}

}  // namespace catsim
