#pragma once

// Aggregation of run reports into summary statistics, deadline-miss tables and
// binned indicator-vs-goodput series, with CSV export and transfer-log import.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "catsim/csv.hpp"
#include "catsim/error.hpp"
#include "catsim/simulator.hpp"

namespace catsim {

struct SummaryStats {
    std::string policy;
    std::string kpi;  // "goodput_mbps" or "age_s"
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;  // population
    double q1 = 0.0;
    double q3 = 0.0;
};

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("quantile: empty input");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline SummaryStats describe(std::string policy, std::string kpi, std::vector<double> values) {
    SummaryStats s;
    s.policy = std::move(policy);
    s.kpi = std::move(kpi);
    s.count = values.size();
    if (values.empty()) {
        s.mean = s.median = s.sd = s.q1 = s.q3 = NAN;
        return s;
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size()));
    const auto n = values.size();
    s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    s.q1 = std::min(quantile_sorted(values, 0.25), s.median);
    s.q3 = std::max(quantile_sorted(values, 0.75), s.median);
    return s;
}

/// Pools per-transfer goodputs and per-packet ages across all runs that share
/// a policy label. Two rows (goodput, age) per policy, in first-seen order.
inline std::vector<SummaryStats> summarize(std::span<const RunReport> reports) {
    if (reports.empty()) throw Error("summarize: no reports");
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pooled;
    for (const auto& r : reports) {
        auto [it, fresh] = pooled.try_emplace(r.policy);
        if (fresh) order.push_back(r.policy);
        for (const auto& rec : r.records) it->second.first.push_back(rec.goodput);
        it->second.second.insert(it->second.second.end(), r.ages.begin(), r.ages.end());
    }
    std::vector<SummaryStats> out;
    for (const auto& p : order) {
        auto& [goodputs, ages] = pooled[p];
        out.push_back(describe(p, "goodput_mbps", std::move(goodputs)));
        out.push_back(describe(p, "age_s", std::move(ages)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deadline miss ratio table

inline const std::vector<double>& default_deadlines() {
    static const std::vector<double> d = {30.0, 60.0, 120.0, 180.0};
    return d;
}

struct DmrRow {
    std::string policy;
    double t_min = 0.0;
    std::vector<double> dmr;  // one per deadline; NaN when nothing was delivered
};

struct DmrTable {
    std::vector<double> deadlines;
    std::vector<DmrRow> rows;
};

/// One row per (policy, t_min) with packet ages pooled across runs.
inline DmrTable dmr_table(std::span<const RunReport> reports, std::span<const double> deadlines) {
    for (std::size_t i = 1; i < deadlines.size(); ++i)
        if (!(deadlines[i] > deadlines[i - 1])) throw Error("dmr_table: deadlines must be strictly increasing");
    DmrTable table;
    table.deadlines.assign(deadlines.begin(), deadlines.end());
    std::vector<std::pair<std::string, double>> order;
    std::map<std::pair<std::string, double>, std::vector<double>> pooled;
    for (const auto& r : reports) {
        const auto key = std::pair{r.policy, r.t_min};
        auto [it, fresh] = pooled.try_emplace(key);
        if (fresh) order.push_back(key);
        it->second.insert(it->second.end(), r.ages.begin(), r.ages.end());
    }
    for (const auto& key : order) {
        DmrRow row{key.first, key.second, {}};
        const auto& ages = pooled[key];
        for (double d : deadlines) row.dmr.push_back(ages.empty() ? NAN : compute_dmr(ages, d));
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Binned indicator vs. goodput

enum class BinIndicator { rsrp, rsrq, snr, cqi, speed, payload_mb };

inline std::string_view to_string(BinIndicator b) {
    switch (b) {
        case BinIndicator::rsrp: return "rsrp";
        case BinIndicator::rsrq: return "rsrq";
        case BinIndicator::snr: return "snr";
        case BinIndicator::cqi: return "cqi";
        case BinIndicator::speed: return "speed";
        case BinIndicator::payload_mb: return "payload_mb";
    }
    return "?";
}

inline std::optional<BinIndicator> bin_indicator_from_string(std::string_view s) {
    for (auto b : {BinIndicator::rsrp, BinIndicator::rsrq, BinIndicator::snr, BinIndicator::cqi, BinIndicator::speed,
                   BinIndicator::payload_mb})
        if (to_string(b) == s) return b;
    return std::nullopt;
}

inline double bin_value(const TransmissionRecord& r, BinIndicator b) {
    switch (b) {
        case BinIndicator::rsrp: return r.at_start.rsrp;
        case BinIndicator::rsrq: return r.at_start.rsrq;
        case BinIndicator::snr: return r.at_start.snr;
        case BinIndicator::cqi: return r.at_start.cqi;
        case BinIndicator::speed: return r.at_start.speed;
        case BinIndicator::payload_mb: return r.bytes / 1e6;
    }
    return 0.0;
}

struct BinnedSeries {
    std::string indicator;
    double bin_width = 0.0;
    std::vector<double> centers;
    std::vector<double> means;
    std::vector<double> half_widths;  // 95 % normal-approximation CI of the mean
    std::vector<std::size_t> counts;
};

inline constexpr double kZ95 = 1.96;

/// Groups transfers by the indicator value observed at transfer start into
/// bins [k*w, (k+1)*w) and reports mean goodput with 1.96 * SD / sqrt(n).
/// Empty bins are omitted.
inline BinnedSeries binned_correlation(std::span<const TransmissionRecord> records, BinIndicator indicator,
                                       double bin_width) {
    if (!(bin_width > 0.0)) throw Error("binned_correlation: bin width must be > 0");
    BinnedSeries out;
    out.indicator = std::string(to_string(indicator));
    out.bin_width = bin_width;
    std::map<std::int64_t, std::vector<double>> bins;
    for (const auto& r : records)
        bins[static_cast<std::int64_t>(std::floor(bin_value(r, indicator) / bin_width))].push_back(r.goodput);
    for (const auto& [k, g] : bins) {
        const auto n = static_cast<double>(g.size());
        double sum = 0.0;
        for (double v : g) sum += v;
        const double mean = sum / n;
        double ss = 0.0;
        for (double v : g) ss += (v - mean) * (v - mean);
        const double sd = g.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        out.centers.push_back((static_cast<double>(k) + 0.5) * bin_width);
        out.means.push_back(mean);
        out.half_widths.push_back(kZ95 * sd / std::sqrt(n));
        out.counts.push_back(g.size());
    }
    return out;
}

inline std::vector<TransmissionRecord> all_records(std::span<const RunReport> reports) {
    std::vector<TransmissionRecord> out;
    for (const auto& r : reports) out.insert(out.end(), r.records.begin(), r.records.end());
    return out;
}

// ---------------------------------------------------------------------------
// CSV export

inline void write_summary_csv(std::ostream& out, std::span<const SummaryStats> stats) {
    using csv::format_double;
    out << "policy,kpi,count,mean,median,sd,q1,q3\n";
    for (const auto& s : stats)
        out << s.policy << ',' << s.kpi << ',' << s.count << ',' << format_double(s.mean) << ','
            << format_double(s.median) << ',' << format_double(s.sd) << ',' << format_double(s.q1) << ','
            << format_double(s.q3) << '\n';
}

inline std::string deadline_column(double d) { return "dmr_" + csv::format_double(d) + "s"; }

inline void write_dmr_csv(std::ostream& out, const DmrTable& table) {
    out << "policy,t_min";
    for (double d : table.deadlines) out << ',' << deadline_column(d);
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.policy << ',' << csv::format_double(row.t_min);
        for (double v : row.dmr) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

/// All series go into one file, distinguished by the indicator column.
inline void write_binned_csv(std::ostream& out, std::span<const BinnedSeries> series) {
    using csv::format_double;
    out << "indicator,bin_center,mean_goodput_mbps,ci95_half_width,count,ci_method\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.centers.size(); ++i)
            out << s.indicator << ',' << format_double(s.centers[i]) << ',' << format_double(s.means[i]) << ','
                << format_double(s.half_widths[i]) << ',' << s.counts[i] << ",normal_1.96\n";
}

inline void write_binned_csv(std::ostream& out, const BinnedSeries& s) {
    write_binned_csv(out, std::span<const BinnedSeries>(&s, 1));
}

inline constexpr std::string_view kCurveHeader = "metric,alpha,phi,probability";

inline void write_analytic_curve_rows(std::ostream& out, const MetricDefinition& def,
                                      std::span<const CurvePoint> curve) {
    for (const auto& p : curve)
        out << def.name << ',' << csv::format_double(def.alpha) << ',' << csv::format_double(p.phi) << ','
            << csv::format_double(p.probability) << '\n';
}

inline void write_analytic_curve_csv(std::ostream& out, const MetricDefinition& def,
                                     std::span<const CurvePoint> curve) {
    out << kCurveHeader << '\n';
    write_analytic_curve_rows(out, def, curve);
}

inline constexpr std::string_view kTransferLogHeader =
    "policy,kind,t_min,trace,run,seed,start_s,end_s,bytes,goodput_mbps,trigger,"
    "t_sample_s,distance_m,speed_mps,rsrp_dbm,rsrq_db,snr_db,cqi,capacity_mbps,packets,generation_times_s";

/// Per-transfer log. Also usable as a predictor training dataset.
inline void write_transfer_log_csv(std::ostream& out, std::span<const RunReport> reports) {
    using csv::format_double;
    out << kTransferLogHeader << '\n';
    for (const auto& r : reports) {
        for (const auto& rec : r.records) {
            const auto& s = rec.at_start;
            out << r.policy << ',' << to_string(r.kind) << ',' << format_double(r.t_min) << ',' << r.trace << ','
                << r.run << ',' << r.seed << ',' << format_double(rec.start) << ',' << format_double(rec.end) << ','
                << format_double(rec.bytes) << ',' << format_double(rec.goodput) << ',' << to_string(rec.trigger)
                << ',' << format_double(s.t) << ',' << format_double(s.distance) << ',' << format_double(s.speed)
                << ',' << format_double(s.rsrp) << ',' << format_double(s.rsrq) << ',' << format_double(s.snr)
                << ',' << s.cqi << ',' << format_double(capacity_of(s)) << ',' << rec.packet_generation_times.size()
                << ',';
            for (std::size_t i = 0; i < rec.packet_generation_times.size(); ++i)
                out << (i ? ";" : "") << format_double(rec.packet_generation_times[i]);
            out << '\n';
        }
    }
}

/// Rebuilds run reports (records and ages) from a transfer log. Runs are
/// keyed by (policy, t_min, trace, run) in first-seen order.
inline std::vector<RunReport> read_transfer_log_csv(std::istream& in) {
    const auto table = csv::read(in);
    const auto hdr = csv::split(kTransferLogHeader);
    std::vector<std::size_t> col;
    for (const auto& h : hdr) col.push_back(table.require_column(h));
    enum : std::size_t {
        policy, kind, t_min, trace, run, seed, start, end, bytes, goodput, trigger, t_sample, distance, speed,
        rsrp, rsrq, snr, cqi, capacity, packets, gen_times
    };
    std::vector<RunReport> out;
    std::map<std::tuple<std::string, double, std::string, std::size_t>, std::size_t> index;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = "row " + std::to_string(table.line_numbers[r]);
        if (row.size() != hdr.size()) throw ParseError(where + ": expected " + std::to_string(hdr.size()) + " fields");
        auto num = [&](std::size_t c) { return table.number(r, col[c]); };
        auto count = [&](std::size_t c) {
            const double v = num(c);
            if (v < 0.0 || v != std::floor(v)) throw ParseError(where + ": column '" + hdr[c] + "' must be a count");
            return static_cast<std::size_t>(v);
        };
        const auto k = policy_kind_from_string(row[col[kind]]);
        if (!k) throw ParseError(where + ": unknown policy kind '" + row[col[kind]] + "'");
        const auto trig = trigger_from_string(row[col[trigger]]);
        if (!trig) throw ParseError(where + ": unknown trigger '" + row[col[trigger]] + "'");

        const auto key = std::tuple{row[col[policy]], num(t_min), row[col[trace]], count(run)};
        auto [it, fresh] = index.try_emplace(key, out.size());
        if (fresh) {
            RunReport rep;
            rep.policy = row[col[policy]];
            rep.kind = *k;
            rep.t_min = num(t_min);
            rep.trace = row[col[trace]];
            rep.run = count(run);
            rep.seed = static_cast<std::uint64_t>(count(seed));
            out.push_back(std::move(rep));
        }
        auto& rep = out[it->second];

        TransmissionRecord rec;
        rec.start = num(start);
        rec.end = num(end);
        rec.bytes = num(bytes);
        rec.goodput = num(goodput);
        rec.trigger = *trig;
        rec.at_start.t = num(t_sample);
        rec.at_start.distance = num(distance);
        rec.at_start.speed = num(speed);
        rec.at_start.rsrp = num(rsrp);
        rec.at_start.rsrq = num(rsrq);
        rec.at_start.snr = num(snr);
        rec.at_start.cqi = static_cast<int>(count(cqi));
        rec.at_start.capacity = num(capacity);
        if (!(rec.end > rec.start)) throw ParseError(where + ": end_s must exceed start_s");
        const auto n_packets = count(packets);
        const auto& gen_field = row[col[gen_times]];
        if (n_packets > 0) {
            for (const auto& tok : csv::split(gen_field, ';')) {
                auto g = csv::to_double(tok);
                if (!g) throw ParseError(where + ": cannot parse generation time '" + tok + "'");
                rec.packet_generation_times.push_back(*g);
            }
        }
        if (rec.packet_generation_times.size() != n_packets)
            throw ParseError(where + ": packet count does not match generation times");
        for (double g : rec.packet_generation_times) rep.ages.push_back(rec.end - g);
        rep.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace catsim
