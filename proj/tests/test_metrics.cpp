#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "catsim/metrics.hpp"

using namespace catsim;

namespace {

MetricDefinition harmful_0_10() { return {"load", Indicator::snr, 0.0, 10.0, 1.0, Polarity::harmful}; }

}  // namespace

TEST(NormalizeTheta, RsrpBoundaries) {
    const auto rsrp = default_metrics::rsrp();
    EXPECT_DOUBLE_EQ(normalize_theta(rsrp, -120.0), 0.0);
    EXPECT_DOUBLE_EQ(normalize_theta(rsrp, -80.0), 1.0);
    EXPECT_DOUBLE_EQ(normalize_theta(rsrp, -100.0), 0.5);
}

TEST(NormalizeTheta, HarmfulComplement) { EXPECT_DOUBLE_EQ(normalize_theta(harmful_0_10(), 2.5), 0.75); }

TEST(NormalizeTheta, ClampsOutOfRange) {
    const auto rsrp = default_metrics::rsrp();
    EXPECT_EQ(normalize_theta(rsrp, -60.0), 1.0);
    EXPECT_EQ(normalize_theta(rsrp, -140.0), 0.0);
    EXPECT_EQ(normalize_theta(harmful_0_10(), 50.0), 0.0);
    EXPECT_EQ(normalize_theta(harmful_0_10(), -5.0), 1.0);
}

TEST(TransmissionProbability, Branches) {
    const auto rsrp = default_metrics::rsrp();
    EXPECT_EQ(transmission_probability(rsrp, -80.0, 5.0, {10.0, 120.0, 1.0}), 0.0);
    EXPECT_EQ(transmission_probability(rsrp, -120.0, 130.0, {10.0, 120.0, 1.0}), 1.0);
    EXPECT_NEAR(transmission_probability(rsrp, -100.0, 60.0, {30.0, 120.0, 1.0}), 0.00390625, 1e-15);
}

TEST(TransmissionProbability, BoundaryInclusion) {
    const auto snr = default_metrics::snr();
    const TimingConfig t{30.0, 120.0, 1.0};
    EXPECT_EQ(transmission_probability(snr, 30.0, 30.0, t), 0.0);  // delta_t == t_min
    EXPECT_NEAR(transmission_probability(snr, 15.0, 120.0, t), std::pow(0.5, 8), 1e-15);  // middle branch
    EXPECT_EQ(transmission_probability(snr, 0.0, std::nextafter(120.0, 200.0), t), 1.0);
}

TEST(TransmissionProbability, MonotoneInPhiAndDeltaT) {
    const TimingConfig t{30.0, 120.0, 1.0};
    const auto snr = default_metrics::snr();
    double prev = -1.0;
    for (double phi = -5.0; phi <= 35.0; phi += 0.25) {
        const double p = transmission_probability(snr, phi, 60.0, t);
        EXPECT_GE(p, prev);
        prev = p;
    }
    auto harm = harmful_0_10();
    prev = 2.0;
    for (double phi = -1.0; phi <= 11.0; phi += 0.1) {
        const double p = transmission_probability(harm, phi, 60.0, t);
        EXPECT_LE(p, prev);
        prev = p;
    }
    for (double phi : {0.0, 7.0, 30.0}) {
        prev = 0.0;
        for (double dt = 0.0; dt <= 200.0; dt += 0.5) {
            const double p = transmission_probability(snr, phi, dt, t);
            EXPECT_GE(p, prev);
            prev = p;
        }
    }
}

TEST(TransmissionProbability, LargerAlphaIsSmaller) {
    auto def = default_metrics::snr();
    for (double phi = 0.5; phi < 30.0; phi += 0.5) {
        double prev = 2.0;
        for (double a : {1.0, 1.5, 2.0, 4.0, 6.0, 8.0}) {
            def.alpha = a;
            const double p = transmission_probability(def, phi, 60.0, {});
            EXPECT_LE(p, prev);
            prev = p;
        }
    }
}

TEST(Combine, Optimistic) {
    EXPECT_EQ(combine_optimistic(std::vector{0.1, 0.6, 0.3}), 0.6);
    EXPECT_EQ(combine_optimistic(std::vector{0.4}), 0.4);
    EXPECT_EQ(combine_optimistic(std::vector{0.2, 0.2, 0.2}), 0.2);
    EXPECT_THROW(combine_optimistic(std::vector<double>{}), Error);
}

TEST(Combine, Pessimistic) {
    EXPECT_EQ(combine_pessimistic(std::vector{0.1, 0.6, 0.3}), 0.1);
    EXPECT_EQ(combine_pessimistic(std::vector{0.4}), 0.4);
    EXPECT_EQ(combine_pessimistic(std::vector{0.9, 0.9}), 0.9);
    EXPECT_THROW(combine_pessimistic(std::vector<double>{}), Error);
}

TEST(Combine, WeightedMean) {
    EXPECT_NEAR(combine_weighted_mean(std::vector{0.2, 0.4}, std::vector{1.0, 1.0}), 0.3, 1e-15);
    EXPECT_EQ(combine_weighted_mean(std::vector{0.2, 0.4}, std::vector{1.0, 0.0}), 0.2);
    EXPECT_EQ(combine_weighted_mean(std::vector{0.2, 0.4}, std::vector{2.0, 2.0}),
              combine_weighted_mean(std::vector{0.2, 0.4}, std::vector{1.0, 1.0}));
}

TEST(Combine, WeightedMeanErrors) {
    EXPECT_THROW(combine_weighted_mean(std::vector{0.2, 0.4}, std::vector{1.0}), Error);
    EXPECT_THROW(combine_weighted_mean(std::vector{0.2, 0.4}, std::vector{0.0, 0.0}), Error);
    EXPECT_THROW(combine_weighted_mean(std::vector{0.2, 0.4}, std::vector{1.0, -1.0}), Error);
    EXPECT_THROW(combine_weighted_mean(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Combine, RandomOrderingAndInvariance) {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto n = 1 + rng.index(7);
        std::vector<double> p(n), w(n);
        for (std::size_t j = 0; j < n; ++j) {
            p[j] = rng.uniform();
            w[j] = rng.uniform() * 5.0;
        }
        const double lo = combine_pessimistic(p), hi = combine_optimistic(p), m = combine_weighted_mean(p, w);
        ASSERT_LE(lo, m);
        ASSERT_LE(m, hi);

        std::vector<std::size_t> perm(n);
        for (std::size_t j = 0; j < n; ++j) perm[j] = j;
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        std::vector<double> pp(n), wp(n);
        for (std::size_t j = 0; j < n; ++j) {
            pp[j] = p[perm[j]];
            wp[j] = w[perm[j]];
        }
        ASSERT_EQ(combine_optimistic(pp), hi);
        ASSERT_EQ(combine_pessimistic(pp), lo);
        ASSERT_EQ(combine_weighted_mean(pp, wp), m);

        // Exact scalings give bit-identical results; arbitrary ones agree to rounding.
        const double c2 = std::ldexp(1.0, static_cast<int>(rng.index(61)) - 30);
        const double cr = std::exp(3.0 * rng.normal());
        std::vector<double> w2(n), wr(n);
        for (std::size_t j = 0; j < n; ++j) {
            w2[j] = w[j] * c2;
            wr[j] = w[j] * cr;
        }
        ASSERT_EQ(combine_weighted_mean(p, w2), m);
        ASSERT_NEAR(combine_weighted_mean(p, wr), m, 1e-14);
    }
}

TEST(Combine, IntegerWeightScalingExact) {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const auto n = 1 + rng.index(6);
        std::vector<double> p(n), w(n), ws(n);
        const double c = 1.0 + static_cast<double>(rng.index(999));
        for (std::size_t j = 0; j < n; ++j) {
            p[j] = rng.uniform();
            w[j] = static_cast<double>(rng.index(10));
        }
        w[0] += 1.0;
        for (std::size_t j = 0; j < n; ++j) ws[j] = w[j] * c;
        ASSERT_EQ(combine_weighted_mean(p, w), combine_weighted_mean(p, ws));
    }
}

TEST(Combine, ConfigDispatch) {
    const std::vector p{0.1, 0.5};
    EXPECT_EQ(combine({CombineStrategy::optimistic, {}}, p), 0.5);
    EXPECT_EQ(combine({CombineStrategy::pessimistic, {}}, p), 0.1);
    EXPECT_NEAR(combine({CombineStrategy::weighted_mean, {3.0, 1.0}}, p), 0.2, 1e-15);
    EXPECT_THROW((CombinerConfig{CombineStrategy::weighted_mean, {1.0}}.validate(2)), Error);
    EXPECT_THROW((CombinerConfig{CombineStrategy::weighted_mean, {0.0, 0.0}}.validate(2)), Error);
    EXPECT_NO_THROW((CombinerConfig{CombineStrategy::optimistic, {}}.validate(3)));
}

TEST(Bernoulli, Extremes) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        for (int i = 0; i < 100; ++i) {
            EXPECT_FALSE(bernoulli_decide(0.0, rng));
            EXPECT_TRUE(bernoulli_decide(1.0, rng));
        }
    }
}

TEST(Bernoulli, HalfFrequency) {
    Rng rng(42);
    int hits = 0;
    for (int i = 0; i < 10000; ++i) hits += bernoulli_decide(0.5, rng);
    EXPECT_GE(hits, 4800);
    EXPECT_LE(hits, 5200);
}

TEST(Bernoulli, DeterministicPerSeed) {
    Rng a(9), b(9);
    for (int i = 0; i < 500; ++i) ASSERT_EQ(bernoulli_decide(0.3, a), bernoulli_decide(0.3, b));
}

TEST(AnalyticCurve, Endpoints) {
    MetricDefinition def{"x", Indicator::snr, 0.0, 10.0, 1.0, Polarity::conducive};
    const auto c = export_analytic_curve(def, 11);
    ASSERT_EQ(c.size(), 11u);
    EXPECT_EQ(c.front().phi, 0.0);
    EXPECT_EQ(c.front().probability, 0.0);
    EXPECT_EQ(c.back().phi, 10.0);
    EXPECT_EQ(c.back().probability, 1.0);
}

TEST(AnalyticCurve, MidpointAlpha8) {
    auto def = default_metrics::snr();
    const auto c = export_analytic_curve(def, 3);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_NEAR(c[1].probability, 0.00390625, 1e-15);
    EXPECT_LT(c[0].phi, c[1].phi);
    EXPECT_LT(c[1].phi, c[2].phi);
}

TEST(AnalyticCurve, MonotoneAndValidated) {
    const auto c = export_analytic_curve(default_metrics::rsrq(), 200);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_GT(c[i].phi, c[i - 1].phi);
        EXPECT_GE(c[i].probability, c[i - 1].probability);
    }
    EXPECT_THROW(export_analytic_curve(default_metrics::rsrq(), 1), Error);
}

TEST(MetricDefinition, Validation) {
    EXPECT_THROW((MetricDefinition{"a", Indicator::snr, 1.0, 1.0, 2.0, Polarity::conducive}.validate()), Error);
    EXPECT_THROW((MetricDefinition{"a", Indicator::snr, 0.0, 1.0, 0.5, Polarity::conducive}.validate()), Error);
    EXPECT_NO_THROW((MetricDefinition{"a", Indicator::snr, 0.0, 1.0, 2.5, Polarity::conducive}.validate()));
}

TEST(TimingConfig, Validation) {
    EXPECT_NO_THROW((TimingConfig{}.validate()));
    EXPECT_THROW((TimingConfig{120.0, 120.0, 1.0}.validate()), Error);
    EXPECT_THROW((TimingConfig{30.0, 120.0, 0.0}.validate()), Error);
    EXPECT_THROW((TimingConfig{0.5, 120.0, 1.0}.validate()), Error);
    EXPECT_THROW((TimingConfig{-1.0, 120.0, 1.0}.validate()), Error);
}

TEST(DefaultMetrics, ReferenceTable) {
    const auto all = default_metrics::all();
    ASSERT_EQ(all.size(), 5u);
    auto check = [](const MetricDefinition& m, double lo, double hi, double a) {
        EXPECT_EQ(m.phi_min, lo) << m.name;
        EXPECT_EQ(m.phi_max, hi) << m.name;
        EXPECT_EQ(m.alpha, a) << m.name;
        EXPECT_EQ(m.polarity, Polarity::conducive) << m.name;
    };
    check(default_metrics::rsrp(), -120, -80, 8);
    check(default_metrics::rsrq(), -11, -4, 6);
    check(default_metrics::snr(), 0, 30, 8);
    check(default_metrics::cqi(), 2, 16, 6);
    check(default_metrics::predicted_rate(15.0), 0, 15, 8);
    check(default_metrics::predicted_rate(), 0, 18, 8);
}
