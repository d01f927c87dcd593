#pragma once

// Channel and mobility time series: CSV ingestion, synthetic generation and
// the latent uplink capacity model used as ground truth by the simulator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "catsim/csv.hpp"
#include "catsim/error.hpp"
#include "catsim/random.hpp"

namespace catsim {

struct ChannelSample {
    double t = 0.0;         // s since trace start
    double distance = 0.0;  // m along the track
    double speed = 0.0;     // m/s
    double rsrp = -120.0;   // dBm
    double rsrq = -11.0;    // dB
    double snr = 0.0;       // dB
    int cqi = 0;            // [0, 15]
    std::optional<double> capacity;  // MBit/s, latent achievable uplink rate

    bool operator==(const ChannelSample&) const = default;
};

/// Immutable, time-ordered sequence of channel samples.
class ChannelTrace {
public:
    ChannelTrace() = default;
    explicit ChannelTrace(std::vector<ChannelSample> samples) : samples_(std::move(samples)) {
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            const auto& s = samples_[i];
            if (i > 0 && !(s.t > samples_[i - 1].t))
                throw Error("trace: timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
            if (s.cqi < 0 || s.cqi > 15) throw Error("trace: cqi out of [0, 15]");
            if (s.capacity && !(*s.capacity >= 0.0)) throw Error("trace: negative capacity");
        }
    }

    const std::vector<ChannelSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const ChannelSample& operator[](std::size_t i) const { return samples_[i]; }

    double start_time() const { return samples_.empty() ? 0.0 : samples_.front().t; }
    double end_time() const { return samples_.empty() ? 0.0 : samples_.back().t; }
    double duration() const { return end_time() - start_time(); }

    bool has_capacity() const {
        return !samples_.empty() &&
               std::all_of(samples_.begin(), samples_.end(), [](const auto& s) { return s.capacity.has_value(); });
    }

    bool operator==(const ChannelTrace&) const = default;

private:
    std::vector<ChannelSample> samples_;
};

/// Zero-order hold: latest sample with sample.t <= t, or the first sample when
/// t precedes the trace.
inline const ChannelSample& sample_at(const ChannelTrace& trace, double t) {
    if (trace.empty()) throw Error("sample_at: empty trace");
    const auto& s = trace.samples();
    auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const ChannelSample& x) { return v < x.t; });
    if (it == s.begin()) return s.front();
    return *std::prev(it);
}

// ---------------------------------------------------------------------------
// Latent capacity

/// Truncated Shannon-style mapping from SNR to uplink capacity, scaled so that
/// 30 dB reaches cap_max. Pass an Rng to apply lognormal noise (sigma 0.15).
inline double latent_capacity(double snr_db, double cap_max, Rng* noise = nullptr) {
    constexpr double kLogSigma = 0.15;
    const double k = cap_max / std::log2(1.0 + 1000.0);
    double c = std::min(cap_max, k * std::log2(1.0 + std::pow(10.0, snr_db / 10.0)));
    if (noise) c *= std::exp(kLogSigma * noise->normal());
    return std::max(0.0, c);
}

inline double latent_capacity(const ChannelSample& sample, double cap_max, Rng* noise = nullptr) {
    return latent_capacity(sample.snr, cap_max, noise);
}

// ---------------------------------------------------------------------------
// Synthetic generation

enum class ProfileKind { suburban, highway };

struct TrackProfile {
    ProfileKind kind = ProfileKind::suburban;
    std::string name = "suburban";
    double speed_min = 0.0;           // m/s
    double speed_max = 0.0;           // m/s
    double length = 0.0;              // m
    double correlation_distance = 0.0;  // m, shadowing decorrelation
    double snr_mean = 0.0;            // dB
    double snr_sd = 0.0;              // dB
    double cell_edge_fraction = 0.0;  // share of each cell with degraded mean SNR
    double cell_spacing = 1000.0;     // m between cell centres

    void validate() const {
        if (!(speed_min < speed_max)) throw Error("profile '" + name + "': speed range must satisfy min < max");
        if (!(speed_min >= 0.0)) throw Error("profile '" + name + "': negative speed");
        if (!(length > 0.0)) throw Error("profile '" + name + "': length must be > 0");
        if (!(correlation_distance > 0.0)) throw Error("profile '" + name + "': correlation distance must be > 0");
        if (!(snr_sd >= 0.0)) throw Error("profile '" + name + "': negative SNR standard deviation");
        if (!(cell_edge_fraction >= 0.0 && cell_edge_fraction < 1.0))
            throw Error("profile '" + name + "': cell-edge fraction must be in [0, 1)");
        if (!(cell_spacing > 0.0)) throw Error("profile '" + name + "': cell spacing must be > 0");
    }
};

namespace profiles {

/// 30-70 km/h suburban track.
inline TrackProfile suburban() {
    return {ProfileKind::suburban, "suburban", 30.0 / 3.6, 70.0 / 3.6, 11000.0, 50.0, 12.0, 8.0, 0.3, 1000.0};
}

/// Highway track, up to 130 km/h.
inline TrackProfile highway() {
    return {ProfileKind::highway, "highway", 80.0 / 3.6, 130.0 / 3.6, 12000.0, 100.0, 9.0, 9.0, 0.2, 2000.0};
}

inline std::optional<TrackProfile> by_name(std::string_view name) {
    if (name == "suburban") return suburban();
    if (name == "highway") return highway();
    return std::nullopt;
}

}  // namespace profiles

/// Constants of the indicator mappings shared by generator and tests.
struct IndicatorModel {
    double snr_min = 0.0;    // dB, generated SNR is clamped to [snr_min, snr_max]
    double snr_max = 30.0;
    double rsrp_noise_db = 2.0;
    double rsrq_noise_db = 1.0;
    double cell_edge_penalty_db = 6.0;
    double speed_step_sd = 0.5;  // m/s per sqrt(s), speed random walk
    double cap_max = 20.0;       // MBit/s
};

/// CQI from SNR via 2 dB bins.
inline int cqi_from_snr(double snr_db) {
    return static_cast<int>(std::clamp(std::floor(snr_db / 2.0) + 1.0, 0.0, 15.0));
}

/// Position-dependent mean SNR: cell-edge stretches sit below the profile mean,
/// the rest above it, so the spatial average stays at snr_mean.
inline double mean_snr_at(const TrackProfile& p, const IndicatorModel& m, double distance) {
    if (p.cell_edge_fraction <= 0.0) return p.snr_mean;
    const double along = std::fmod(std::fmod(distance, p.length), p.cell_spacing) / p.cell_spacing;
    const bool edge = along >= 1.0 - p.cell_edge_fraction;
    if (edge) return p.snr_mean - m.cell_edge_penalty_db;
    return p.snr_mean + m.cell_edge_penalty_db * p.cell_edge_fraction / (1.0 - p.cell_edge_fraction);
}

inline ChannelTrace generate_synthetic_trace(const TrackProfile& profile, double duration, double sample_period,
                                             std::uint64_t seed, const IndicatorModel& model = {}) {
    profile.validate();
    if (!(sample_period > 0.0)) throw Error("generate_synthetic_trace: sample period must be > 0");
    if (!(duration >= sample_period)) throw Error("generate_synthetic_trace: duration must be >= sample period");

    Rng rng(seed);
    const auto n = static_cast<std::size_t>(std::floor(duration / sample_period + 1e-9)) + 1;
    std::vector<ChannelSample> out;
    out.reserve(n);

    double speed = profile.speed_min + (profile.speed_max - profile.speed_min) * rng.uniform();
    double distance = 0.0;
    double shadow = rng.normal();  // unit-variance AR(1) state

    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            speed += model.speed_step_sd * std::sqrt(sample_period) * rng.normal();
            // Reflect at the bounds.
            if (speed > profile.speed_max) speed = 2.0 * profile.speed_max - speed;
            if (speed < profile.speed_min) speed = 2.0 * profile.speed_min - speed;
            speed = std::clamp(speed, profile.speed_min, profile.speed_max);
            distance += speed * sample_period;
            const double rho = std::exp(-speed * sample_period / profile.correlation_distance);
            shadow = rho * shadow + std::sqrt(1.0 - rho * rho) * rng.normal();
        }
        ChannelSample s;
        s.t = static_cast<double>(i) * sample_period;
        s.distance = distance;
        s.speed = speed;
        s.snr = std::clamp(mean_snr_at(profile, model, distance) + profile.snr_sd * shadow, model.snr_min,
                           model.snr_max);
        const double rel = (s.snr - model.snr_min) / (model.snr_max - model.snr_min);
        s.rsrp = std::clamp(-120.0 + 40.0 * rel + model.rsrp_noise_db * rng.normal(), -130.0, -70.0);
        s.rsrq = std::clamp(-14.0 + 11.0 * rel + model.rsrq_noise_db * rng.normal(), -14.0, -3.0);
        s.cqi = cqi_from_snr(s.snr);
        s.capacity = latent_capacity(s.snr, model.cap_max, &rng);
        out.push_back(s);
    }
    return ChannelTrace(std::move(out));
}

// ---------------------------------------------------------------------------
// CSV I/O

inline constexpr std::string_view kTraceHeader = "t_s,distance_m,speed_mps,rsrp_dbm,rsrq_db,snr_db,cqi,capacity_mbps";

inline void write_trace_csv(const ChannelTrace& trace, std::ostream& out) {
    const bool cap = trace.has_capacity();
    out << (cap ? kTraceHeader : kTraceHeader.substr(0, kTraceHeader.rfind(','))) << '\n';
    for (const auto& s : trace.samples()) {
        using csv::format_double;
        out << format_double(s.t) << ',' << format_double(s.distance) << ',' << format_double(s.speed) << ','
            << format_double(s.rsrp) << ',' << format_double(s.rsrq) << ',' << format_double(s.snr) << ','
            << s.cqi;
        if (cap) out << ',' << format_double(*s.capacity);
        out << '\n';
    }
}

inline ChannelTrace parse_trace_csv(std::istream& in) {
    const auto table = csv::read(in);
    const auto c_t = table.require_column("t_s");
    const auto c_dist = table.require_column("distance_m");
    const auto c_speed = table.require_column("speed_mps");
    const auto c_rsrp = table.require_column("rsrp_dbm");
    const auto c_rsrq = table.require_column("rsrq_db");
    const auto c_snr = table.require_column("snr_db");
    const auto c_cqi = table.require_column("cqi");
    const auto c_cap = table.column("capacity_mbps");

    std::vector<ChannelSample> samples;
    samples.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto row_no = std::to_string(table.line_numbers[r]);
        ChannelSample s;
        s.t = table.number(r, c_t);
        s.distance = table.number(r, c_dist);
        s.speed = table.number(r, c_speed);
        s.rsrp = table.number(r, c_rsrp);
        s.rsrq = table.number(r, c_rsrq);
        s.snr = table.number(r, c_snr);
        const double cqi = table.number(r, c_cqi);
        for (double v : {s.t, s.distance, s.speed, s.rsrp, s.rsrq, s.snr, cqi})
            if (!std::isfinite(v)) throw ParseError("row " + row_no + ": non-finite value");
        if (cqi != std::floor(cqi) || cqi < 0.0 || cqi > 15.0)
            throw ParseError("row " + row_no + ", column 'cqi': must be an integer in [0, 15]");
        s.cqi = static_cast<int>(cqi);
        if (s.speed < 0.0) throw ParseError("row " + row_no + ", column 'speed_mps': negative speed");
        if (c_cap) {
            const double cap = table.number(r, *c_cap);
            if (!(cap >= 0.0) || !std::isfinite(cap))
                throw ParseError("row " + row_no + ", column 'capacity_mbps': must be finite and >= 0");
            s.capacity = cap;
        }
        if (!samples.empty() && !(s.t > samples.back().t))
            throw ParseError("non-monotone timestamp at row " + row_no);
        samples.push_back(s);
    }
    return ChannelTrace(std::move(samples));
}

}  // namespace catsim
