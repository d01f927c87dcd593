#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "catsim/reporting.hpp"
#include "support.hpp"

using namespace catsim;

namespace {

RunReport with_goodputs(std::string policy, std::vector<double> goodputs, std::vector<double> ages = {1.0}) {
    RunReport r;
    r.policy = std::move(policy);
    for (double g : goodputs) {
        TransmissionRecord rec;
        rec.goodput = g;
        r.records.push_back(rec);
    }
    r.ages = std::move(ages);
    return r;
}

TransmissionRecord record_at_snr(double snr, double goodput) {
    TransmissionRecord rec;
    rec.at_start.snr = snr;
    rec.goodput = goodput;
    return rec;
}

std::vector<RunReport> simulated(std::uint64_t seed) {
    const auto trace = generate_synthetic_trace(profiles::suburban(), 1800.0, 1.0, seed);
    std::vector<PolicyConfig> pols{test::make_policy(PolicyKind::periodic),
                                   test::make_policy(PolicyKind::single_metric, {default_metrics::snr()}, 10.0)};
    pols[1].name = "snr";
    const std::vector<NamedTrace> traces{{"sub", trace}};
    return sweep(pols, traces, 3, seed, {});
}

}  // namespace

TEST(Summarize, Fixtures) {
    std::vector<RunReport> reps{with_goodputs("p", {1, 2, 3})};
    auto s = summarize(reps);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].kpi, "goodput_mbps");
    EXPECT_DOUBLE_EQ(s[0].mean, 2.0);
    EXPECT_DOUBLE_EQ(s[0].median, 2.0);

    reps = {with_goodputs("p", {7.5})};
    s = summarize(reps);
    EXPECT_EQ(s[0].mean, 7.5);
    EXPECT_EQ(s[0].median, 7.5);
    EXPECT_EQ(s[0].sd, 0.0);

    reps = {with_goodputs("p", {1, 1, 4})};
    s = summarize(reps);
    EXPECT_DOUBLE_EQ(s[0].mean, 2.0);
    EXPECT_DOUBLE_EQ(s[0].median, 1.0);
    EXPECT_NEAR(s[0].sd, std::sqrt(2.0), 1e-4);
    EXPECT_THROW(summarize(std::vector<RunReport>{}), Error);
}

TEST(Summarize, PoolsRunsOfSamePolicy) {
    std::vector<RunReport> reps{with_goodputs("a", {1, 2}, {5, 6}), with_goodputs("b", {10}),
                                with_goodputs("a", {3}, {7})};
    const auto s = summarize(reps);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0].policy, "a");
    EXPECT_EQ(s[0].count, 3u);
    EXPECT_DOUBLE_EQ(s[0].mean, 2.0);
    EXPECT_EQ(s[1].kpi, "age_s");
    EXPECT_EQ(s[1].count, 3u);
    EXPECT_DOUBLE_EQ(s[1].median, 6.0);
    EXPECT_EQ(s[2].policy, "b");
}

TEST(Summarize, QuartileOrdering) {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(1 + rng.index(30));
        for (auto& x : v) x = rng.normal(0.0, 10.0);
        const auto s = describe("p", "k", v);
        EXPECT_LE(s.q1, s.median);
        EXPECT_LE(s.median, s.q3);
        EXPECT_GE(s.sd, 0.0);
    }
}

TEST(DmrTable, Fixtures) {
    RunReport r;
    r.policy = "p";
    r.t_min = 30.0;
    r.ages = {10, 40, 70, 200};
    std::vector<RunReport> reps{r};
    const auto t = dmr_table(reps, default_deadlines());
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0].dmr, (std::vector<double>{0.75, 0.5, 0.25, 0.25}));

    reps[0].ages = {1, 5, 30};
    EXPECT_EQ(dmr_table(reps, default_deadlines()).rows[0].dmr, (std::vector<double>{0, 0, 0, 0}));
    EXPECT_THROW(dmr_table(reps, std::vector<double>{60, 30}), Error);
    EXPECT_THROW(dmr_table(reps, std::vector<double>{30, 30}), Error);
}

TEST(DmrTable, CsvHasOneColumnPerDeadline) {
    RunReport r;
    r.policy = "p";
    r.t_min = 30.0;
    r.ages = {10};
    std::vector<RunReport> reps{r};
    std::ostringstream out;
    write_dmr_csv(out, dmr_table(reps, default_deadlines()));
    EXPECT_EQ(out.str(), "policy,t_min,dmr_30s,dmr_60s,dmr_120s,dmr_180s\np,30,0,0,0,0\n");
}

TEST(DmrTable, RowsMonotoneOnSimulatedData) {
    const auto reps = simulated(5);
    const std::vector<double> deadlines{5, 15, 30, 60, 90, 120, 180, 240};
    for (const auto& row : dmr_table(reps, deadlines).rows)
        for (std::size_t i = 1; i < row.dmr.size(); ++i) EXPECT_LE(row.dmr[i], row.dmr[i - 1]);
}

TEST(Binned, Fixtures) {
    std::vector<TransmissionRecord> same{record_at_snr(1.0, 4.0), record_at_snr(1.5, 4.0), record_at_snr(0.2, 4.0)};
    auto s = binned_correlation(same, BinIndicator::snr, 2.0);
    ASSERT_EQ(s.centers.size(), 1u);
    EXPECT_EQ(s.half_widths[0], 0.0);
    EXPECT_EQ(s.centers[0], 1.0);

    std::vector<TransmissionRecord> two{record_at_snr(0.5, 1.0), record_at_snr(1.5, 3.0), record_at_snr(2.5, 2.0)};
    s = binned_correlation(two, BinIndicator::snr, 2.0);
    ASSERT_EQ(s.centers.size(), 2u);
    EXPECT_EQ(s.means, (std::vector<double>{2.0, 2.0}));
    EXPECT_EQ(s.counts, (std::vector<std::size_t>{2, 1}));
    // sample SD of (1, 3) is sqrt(2)
    EXPECT_NEAR(s.half_widths[0], 1.96 * std::sqrt(2.0) / std::sqrt(2.0), 1e-12);

    s = binned_correlation({}, BinIndicator::snr, 2.0);
    EXPECT_TRUE(s.centers.empty());
    EXPECT_THROW(binned_correlation(two, BinIndicator::snr, 0.0), Error);
}

TEST(Binned, EmptySeriesHeaderOnly) {
    std::ostringstream out;
    write_binned_csv(out, binned_correlation({}, BinIndicator::rsrp, 1.0));
    EXPECT_EQ(out.str(), "indicator,bin_center,mean_goodput_mbps,ci95_half_width,count,ci_method\n");
}

TEST(Binned, CountWeightedMeansReproduceGlobalMean) {
    const auto records = all_records(simulated(9));
    double global = 0.0;
    for (const auto& r : records) global += r.goodput;
    global /= static_cast<double>(records.size());
    for (auto ind : {BinIndicator::rsrp, BinIndicator::rsrq, BinIndicator::snr, BinIndicator::cqi, BinIndicator::speed,
                     BinIndicator::payload_mb}) {
        const auto s = binned_correlation(records, ind, 1.5);
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < s.means.size(); ++i) {
            acc += s.means[i] * static_cast<double>(s.counts[i]);
            n += s.counts[i];
            EXPECT_GE(s.counts[i], 1u);
            EXPECT_GE(s.half_widths[i], 0.0);
        }
        EXPECT_EQ(n, records.size());
        EXPECT_NEAR(acc / static_cast<double>(n), global, 1e-9);
    }
}

TEST(Csv, SummaryHeaderAndReparse) {
    const auto stats = summarize(simulated(2));
    std::stringstream ss;
    write_summary_csv(ss, stats);
    const auto table = csv::read(ss);
    EXPECT_EQ(table.header, csv::split("policy,kpi,count,mean,median,sd,q1,q3"));
    ASSERT_EQ(table.rows.size(), stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
        EXPECT_EQ(table.rows[i][0], stats[i].policy);
        EXPECT_EQ(table.rows[i][1], stats[i].kpi);
        EXPECT_NEAR(table.number(i, 3), stats[i].mean, 1e-9);
        EXPECT_NEAR(table.number(i, 4), stats[i].median, 1e-9);
        EXPECT_NEAR(table.number(i, 5), stats[i].sd, 1e-9);
        EXPECT_NEAR(table.number(i, 6), stats[i].q1, 1e-9);
        EXPECT_NEAR(table.number(i, 7), stats[i].q3, 1e-9);
    }
}

TEST(Csv, BinnedReparse) {
    const auto s = binned_correlation(all_records(simulated(4)), BinIndicator::snr, 2.0);
    std::stringstream ss;
    write_binned_csv(ss, s);
    const auto table = csv::read(ss);
    ASSERT_EQ(table.rows.size(), s.centers.size());
    for (std::size_t i = 0; i < s.centers.size(); ++i) {
        EXPECT_NEAR(table.number(i, 1), s.centers[i], 1e-9);
        EXPECT_NEAR(table.number(i, 2), s.means[i], 1e-9);
        EXPECT_NEAR(table.number(i, 3), s.half_widths[i], 1e-9);
        EXPECT_EQ(table.rows[i][5], "normal_1.96");
    }
}

TEST(Csv, AnalyticCurveReparse) {
    const auto def = default_metrics::rsrp();
    const auto curve = export_analytic_curve(def, 41);
    std::stringstream ss;
    write_analytic_curve_csv(ss, def, curve);
    const auto table = csv::read(ss);
    ASSERT_EQ(table.rows.size(), curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        EXPECT_NEAR(table.number(i, 2), curve[i].phi, 1e-9);
        EXPECT_NEAR(table.number(i, 3), curve[i].probability, 1e-9);
    }
}

TEST(TransferLog, RoundTrip) {
    const auto reps = simulated(6);
    std::stringstream ss;
    write_transfer_log_csv(ss, reps);
    const auto back = read_transfer_log_csv(ss);
    ASSERT_EQ(back.size(), reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i) {
        EXPECT_EQ(back[i].policy, reps[i].policy);
        EXPECT_EQ(back[i].kind, reps[i].kind);
        EXPECT_EQ(back[i].t_min, reps[i].t_min);
        EXPECT_EQ(back[i].seed, reps[i].seed);
        ASSERT_EQ(back[i].records.size(), reps[i].records.size());
        for (std::size_t j = 0; j < reps[i].records.size(); ++j) {
            const auto& a = reps[i].records[j];
            const auto& b = back[i].records[j];
            EXPECT_EQ(a.start, b.start);
            EXPECT_EQ(a.end, b.end);
            EXPECT_EQ(a.goodput, b.goodput);
            EXPECT_EQ(a.trigger, b.trigger);
            EXPECT_EQ(a.packet_generation_times, b.packet_generation_times);
            EXPECT_EQ(a.at_start.snr, b.at_start.snr);
        }
        EXPECT_EQ(back[i].ages, reps[i].ages);
    }
}

TEST(TransferLog, MalformedRowsReportRow) {
    const std::string hdr(kTransferLogHeader);
    auto fails_with = [&](const std::string& body, const std::string& needle) {
        std::istringstream in(hdr + "\n" + body);
        try {
            read_transfer_log_csv(in);
            ADD_FAILURE() << "accepted: " << body;
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    const std::string good = "p,periodic,30,t,0,1,30,31,1500000,12,periodic,30,0,10,-100,-8,12,7,15,2,0;1";
    {
        std::istringstream in(hdr + "\n" + good + "\n");
        EXPECT_EQ(read_transfer_log_csv(in).size(), 1u);
    }
    fails_with(good + "\n" + "p,periodic,30,t,0,1,30,31\n", "row 3");
    fails_with("p,bogus,30,t,0,1,30,31,1500000,12,periodic,30,0,10,-100,-8,12,7,15,2,0;1\n", "bogus");
    fails_with("p,periodic,30,t,0,1,30,31,1500000,12,periodic,30,0,10,-100,-8,12,7,15,3,0;1\n", "row 2");
    fails_with("p,periodic,30,t,0,1,30,x,1500000,12,periodic,30,0,10,-100,-8,12,7,15,2,0;1\n", "end_s");
    std::istringstream missing("policy,kind\np,periodic\n");
    EXPECT_THROW(read_transfer_log_csv(missing), ParseError);
}
