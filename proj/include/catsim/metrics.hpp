#pragma once

// Channel-aware transmission probability model and multi-metric combinators.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "catsim/error.hpp"
#include "catsim/random.hpp"

namespace catsim {

/// Conducive metrics improve the channel as they grow, harmful ones degrade it.
enum class Polarity { conducive, harmful };

/// Which channel observable a metric reads.
enum class Indicator { rsrp, rsrq, snr, cqi, predicted_rate };

inline std::string_view to_string(Indicator ind) {
    switch (ind) {
        case Indicator::rsrp: return "rsrp";
        case Indicator::rsrq: return "rsrq";
        case Indicator::snr: return "snr";
        case Indicator::cqi: return "cqi";
        case Indicator::predicted_rate: return "predicted_rate";
    }
    return "?";
}

inline std::optional<Indicator> indicator_from_string(std::string_view s) {
    for (auto ind : {Indicator::rsrp, Indicator::rsrq, Indicator::snr, Indicator::cqi,
                     Indicator::predicted_rate}) {
        if (to_string(ind) == s) return ind;
    }
    return std::nullopt;
}

struct MetricDefinition {
    std::string name;
    Indicator indicator = Indicator::snr;
    double phi_min = 0.0;
    double phi_max = 1.0;
    double alpha = 1.0;
    Polarity polarity = Polarity::conducive;

    void validate() const {
        if (!(phi_min < phi_max))
            throw Error("metric '" + name + "': phi_min must be strictly less than phi_max");
        if (!(alpha >= 1.0) || !std::isfinite(alpha))
            throw Error("metric '" + name + "': alpha must be >= 1");
    }
};

struct TimingConfig {
    double t_min = 30.0;
    double t_max = 120.0;
    double t_decision = 1.0;

    void validate() const {
        if (!(t_min >= 0.0)) throw Error("timing: t_min must be >= 0");
        if (!(t_min < t_max)) throw Error("timing: t_min must be < t_max");
        if (!(t_decision > 0.0)) throw Error("timing: t_decision must be > 0");
        if (t_decision > t_min) throw Error("timing: t_decision must be <= t_min");
    }
};

enum class CombineStrategy { optimistic, pessimistic, weighted_mean };

struct CombinerConfig {
    CombineStrategy strategy = CombineStrategy::optimistic;
    std::vector<double> weights;

    void validate(std::size_t metric_count) const;
};

/// Maps a metric value into [0, 1], 1 being the best channel. Values outside
/// [phi_min, phi_max] are clamped. Harmful metrics use the complement of the
/// conducive normalization.
inline double normalize_theta(const MetricDefinition& def, double phi) {
    const double scaled = std::clamp((phi - def.phi_min) / (def.phi_max - def.phi_min), 0.0, 1.0);
    return def.polarity == Polarity::conducive ? scaled : 1.0 - scaled;
}

/// Probability of transmitting now, given the elapsed time since the last
/// transfer completed: 0 up to and including t_min, theta^alpha in between,
/// 1 strictly beyond t_max.
inline double transmission_probability(const MetricDefinition& def, double phi, double delta_t,
                                       const TimingConfig& timing) {
    if (delta_t <= timing.t_min) return 0.0;
    if (delta_t > timing.t_max) return 1.0;
    return std::pow(normalize_theta(def, phi), def.alpha);
}

inline double combine_optimistic(std::span<const double> probabilities) {
    if (probabilities.empty()) throw Error("combine_optimistic: no metric probabilities");
    return *std::max_element(probabilities.begin(), probabilities.end());
}

inline double combine_pessimistic(std::span<const double> probabilities) {
    if (probabilities.empty()) throw Error("combine_pessimistic: no metric probabilities");
    return *std::min_element(probabilities.begin(), probabilities.end());
}

inline double combine_weighted_mean(std::span<const double> probabilities,
                                    std::span<const double> weights) {
    if (probabilities.empty()) throw Error("combine_weighted_mean: no metric probabilities");
    if (probabilities.size() != weights.size())
        throw Error("combine_weighted_mean: weight count does not match metric count");
    // Summing in a canonical order makes the result bit-identical under any
    // joint permutation of probabilities and weights.
    std::vector<std::pair<double, double>> terms;
    terms.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw Error("combine_weighted_mean: negative weight");
        terms.emplace_back(probabilities[i], weights[i]);
    }
    std::sort(terms.begin(), terms.end());
    double weight_sum = 0.0;
    for (const auto& t : terms) weight_sum += t.second;
    if (!(weight_sum > 0.0)) throw Error("combine_weighted_mean: weights sum to zero");
    // Normalizing first keeps the result unchanged under any exact uniform
    // rescaling of the weights.
    double acc = 0.0;
    for (const auto& [p, w] : terms) acc += p * (w / weight_sum);
    // Rounding may push the sum a hair outside the input range.
    const auto [lo, hi] = std::minmax_element(probabilities.begin(), probabilities.end());
    return std::clamp(acc, *lo, *hi);
}

inline double combine(const CombinerConfig& cfg, std::span<const double> probabilities) {
    switch (cfg.strategy) {
        case CombineStrategy::optimistic: return combine_optimistic(probabilities);
        case CombineStrategy::pessimistic: return combine_pessimistic(probabilities);
        case CombineStrategy::weighted_mean:
            return combine_weighted_mean(probabilities, cfg.weights);
    }
    return 0.0;
}

inline void CombinerConfig::validate(std::size_t metric_count) const {
    if (strategy != CombineStrategy::weighted_mean) return;
    if (weights.size() != metric_count)
        throw Error("weighted_mean: weights length must equal the number of metrics");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw Error("weighted_mean: weights must be >= 0");
        sum += w;
    }
    if (!(sum > 0.0)) throw Error("weighted_mean: weights must not sum to zero");
}

/// One Bernoulli draw. Always consumes exactly one value from the stream.
inline bool bernoulli_decide(double p, Rng& rng) { return rng.uniform() < p; }

struct CurvePoint {
    double phi;
    double probability;
};

/// Samples theta^alpha over [phi_min, phi_max] (timeouts ignored).
inline std::vector<CurvePoint> export_analytic_curve(const MetricDefinition& def, std::size_t samples) {
    if (samples < 2) throw Error("export_analytic_curve: need at least 2 samples");
    std::vector<CurvePoint> out;
    out.reserve(samples);
    const double step = (def.phi_max - def.phi_min) / static_cast<double>(samples - 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double phi = i + 1 == samples ? def.phi_max : def.phi_min + step * static_cast<double>(i);
        out.push_back({phi, std::pow(normalize_theta(def, phi), def.alpha)});
    }
    return out;
}

/// Built-in metric set of the reference scenario.
namespace default_metrics {

inline MetricDefinition rsrp() { return {"rsrp", Indicator::rsrp, -120.0, -80.0, 8.0, Polarity::conducive}; }
inline MetricDefinition rsrq() { return {"rsrq", Indicator::rsrq, -11.0, -4.0, 6.0, Polarity::conducive}; }
inline MetricDefinition snr() { return {"snr", Indicator::snr, 0.0, 30.0, 8.0, Polarity::conducive}; }
inline MetricDefinition cqi() { return {"cqi", Indicator::cqi, 2.0, 16.0, 6.0, Polarity::conducive}; }
/// phi_max is 15 or 18 MBit/s in the reference setup.
inline MetricDefinition predicted_rate(double phi_max = 18.0) {
    return {"predicted_rate", Indicator::predicted_rate, 0.0, phi_max, 8.0, Polarity::conducive};
}

inline std::vector<MetricDefinition> all() {
    return {rsrp(), rsrq(), snr(), cqi(), predicted_rate(18.0)};
}

}  // namespace default_metrics

}  // namespace catsim
