#include <array>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "freqbin/bell.hpp"
#include "oracles.hpp"

using namespace freqbin;

namespace {

struct Quadruple {
    double amplitude;
    std::array<double, 4> phases;
};

// Known optimal phases for equal amplitudes.
const std::array<Quadruple, 4> kKnownOptima{{
    {0.51, {0.0, 1.42, 3.85, 2.43}},
    {1.01, {0.0, 1.02, 3.65, 2.63}},
    {1.50, {0.0, 0.72, 3.50, 2.78}},
    {1.95, {0.0, 0.56, 3.42, 2.86}},
}};

BellConfig known_optimum(const Quadruple& q) {
    return BellConfig::equal_amplitudes(q.amplitude, q.phases[0], q.phases[1], q.phases[2],
                                        q.phases[3]);
}

// Closed form: each term is J_0(c_eff)^2.
double s_closed_form(const BellConfig& c) {
    auto term = [](const ModulatorSettings& x, const ModulatorSettings& y) {
        const double j = oracle::bessel_series(
            0, oracle::composed_amplitude(x.amplitude(), x.rf_phase(), y.amplitude(), y.rf_phase()));
        return j * j;
    };
    return term(c.alice[0], c.bob[0]) + term(c.alice[0], c.bob[1]) + term(c.alice[1], c.bob[0]) -
           term(c.alice[1], c.bob[1]);
}

}  // namespace

TEST(ChTerm, Examples) {
    const auto off = ModulatorSettings::off();
    EXPECT_EQ(ch_term(off, off), 1.0);
    EXPECT_NEAR(ch_term(ModulatorSettings(1.3, std::numbers::pi), ModulatorSettings(1.3, 0.0)), 1.0,
                1e-12);
    EXPECT_NEAR(ch_term(ModulatorSettings(1.0, 0.0), ModulatorSettings(1.0, 0.0)), 0.050127, 1e-6);
}

TEST(SStatistic, ZeroDriveSitsOnClassicalBound) {
    const auto r = s_statistic(BellConfig::equal_amplitudes(0.0, 0.0, 1.0, 2.0, 3.0));
    EXPECT_EQ(r.s_value, 2.0);
    EXPECT_EQ(r.terms, (std::array<double, 4>{1.0, 1.0, 1.0, 1.0}));
}

TEST(SStatistic, KnownOptimaViolate) {
    for (const auto& q : kKnownOptima) {
        const auto r = s_statistic(known_optimum(q));
        EXPECT_GT(r.s_value, 2.0) << q.amplitude;
        EXPECT_LE(r.s_value, kQuantumBound + 1e-9);
        EXPECT_EQ(r.s_value, r.terms[0] + r.terms[1] + r.terms[2] - r.terms[3]);
    }
}

TEST(SStatistic, SeriesMatchesClosedForm) {
    for (const auto& q : kKnownOptima) {
        for (double shift : {0.0, 0.9, 4.0}) {
            auto p = q.phases;
            for (double& v : p) v += shift;
            const auto c = BellConfig::equal_amplitudes(q.amplitude, p[0], p[1], p[2], p[3]);
            EXPECT_NEAR(s_statistic(c).s_value, s_closed_form(c), 1e-10);
        }
    }
}

TEST(SStatistic, GaugeInvariance) {
    const auto base = known_optimum(kKnownOptima[1]);
    const double s0 = s_statistic(base).s_value;
    for (double phi : {0.3, 1.7, -2.2, 6.0}) {
        const auto p = base.phases();
        const auto moved = BellConfig::equal_amplitudes(1.01, p[0] + phi, p[1] + phi, p[2] + phi,
                                                        p[3] + phi);
        EXPECT_NEAR(s_statistic(moved).s_value, s0, 1e-10);
    }
}

TEST(SStatistic, NeverExceedsQuantumBound) {
    for (double a = 0.1; a <= 2.74; a += 0.33) {
        for (int k = 0; k < 40; ++k) {
            const auto c = BellConfig::equal_amplitudes(a, 0.0, 0.37 * k, 1.1 * k + 0.2, 2.3 * k);
            EXPECT_LE(s_statistic(c).s_value, kQuantumBound + 1e-9);
        }
    }
}

TEST(Significance, Arithmetic) {
    BellResult r;
    r.s_value = 2.0;
    r.s_sigma = 0.1;
    EXPECT_EQ(violation_significance(r), 0.0);
    r.s_value = 2.2;
    r.s_sigma = 0.04;
    EXPECT_NEAR(violation_significance(r), 5.0, 1e-12);
    r.s_sigma = 0.0;
    EXPECT_THROW(violation_significance(r), UndefinedSignificanceError);
}

TEST(Optimizer, FindsKnownOptima) {
    for (const auto& q : kKnownOptima) {
        const auto best = optimize_phases(q.amplitude, 32, 1);
        EXPECT_GT(best.result.s_value, 2.0);
        EXPECT_LE(best.result.s_value, kQuantumBound + 1e-9);
        EXPECT_GE(best.result.s_value, s_statistic(known_optimum(q)).s_value - 1e-12);
        EXPECT_LT(phase_mismatch(best.config, known_optimum(q)), 0.02) << q.amplitude;
        EXPECT_EQ(best.config.alice[0].rf_phase(), 0.0);
    }
}

TEST(Optimizer, Deterministic) {
    const auto a = optimize_phases(1.2, 8, 5);
    const auto b = optimize_phases(1.2, 8, 5);
    EXPECT_EQ(a.config.phases(), b.config.phases());
    EXPECT_EQ(a.result.s_value, b.result.s_value);
}

TEST(Optimizer, MoreRestartsNeverWorse) {
    double previous = -1.0;
    for (int restarts : {1, 2, 4, 8, 16}) {
        const double s = optimize_phases(2.3, restarts, 3).result.s_value;
        EXPECT_GE(s, previous);
        previous = s;
    }
}

TEST(Optimizer, RejectsBadInput) {
    EXPECT_THROW(optimize_phases(0.0), std::invalid_argument);
    EXPECT_THROW(optimize_phases(1.0, 0), std::invalid_argument);
}

TEST(PhaseMismatch, SymmetriesAreFactoredOut) {
    const auto ref = known_optimum(kKnownOptima[0]);
    const auto p = ref.phases();
    EXPECT_NEAR(phase_mismatch(ref, ref), 0.0, 1e-12);
    const auto shifted = BellConfig::equal_amplitudes(0.51, p[0] + 1, p[1] + 1, p[2] + 1, p[3] + 1);
    EXPECT_NEAR(phase_mismatch(shifted, ref), 0.0, 1e-12);
    const auto negated = BellConfig::equal_amplitudes(0.51, -p[0], -p[1], -p[2], -p[3]);
    EXPECT_NEAR(phase_mismatch(negated, ref), 0.0, 1e-12);
    const auto exchanged = BellConfig::equal_amplitudes(0.51, p[2], p[3], p[0], p[1]);
    EXPECT_NEAR(phase_mismatch(exchanged, ref), 0.0, 1e-12);
    const auto off = BellConfig::equal_amplitudes(0.51, p[0], p[1] + 0.1, p[2], p[3]);
    EXPECT_NEAR(phase_mismatch(off, ref), 0.1, 1e-12);
}

TEST(WorstCase, ZeroToleranceIsNominal) {
    auto c = known_optimum(kKnownOptima[2]);
    c.tolerances = {0.0, 0.0, 0.0};
    const auto w = worst_case_s(c);
    EXPECT_EQ(w.s_worst, w.s_nominal);
    EXPECT_EQ(w.s_nominal, s_statistic(c).s_value);
}

TEST(WorstCase, DefaultTolerancesDegradeS) {
    auto c = optimize_phases(1.95).config;
    const auto w = worst_case_s(c);
    EXPECT_LT(w.s_worst, w.s_nominal);
    EXPECT_LE(w.s_worst, w.s_corner);
    EXPECT_NEAR(s_statistic(w.config).s_value, w.s_worst, 1e-12);
    // The worst point stays inside the box.
    for (int i = 0; i < 2; ++i) {
        EXPECT_LE(std::abs(w.config.alice[i].amplitude() - 1.95), 1.95e-2 + 1e-12);
        EXPECT_LE(std::abs(w.config.bob[i].amplitude() - 1.95), 1.95e-2 + 1e-12);
    }
}

TEST(WorstCase, MonotoneInTolerance) {
    auto c = optimize_phases(1.5).config;
    double previous = s_statistic(c).s_value;
    for (double scale : {0.25, 0.5, 1.0, 2.0}) {
        c.tolerances = {1e-2 * scale, 5e-2 * scale, 10e-2 * scale};
        const double s = worst_case_s(c).s_worst;
        EXPECT_LE(s, previous + 1e-12) << scale;
        previous = s;
    }
    c.tolerances = {-1.0, 0.0, 0.0};
    EXPECT_THROW(worst_case_s(c), std::invalid_argument);
}

TEST(Lhv, ClassicalBoundIsTwo) {
    const auto lhv = enumerate_lhv_bound();
    EXPECT_EQ(lhv.strategies, 16u);
    EXPECT_GT(lhv.mixtures, 16u);
    EXPECT_LE(lhv.ch_max, 0.0);
    EXPECT_NEAR(lhv.normalized_max, kClassicalBound, 1e-12);
}

TEST(Simulated, SignificanceAtOnePointZeroOne) {
    const auto spec = ExperimentSpec::reference();
    const auto cfg = optimize_phases(1.01).config;
    BellSimulation sim;
    sim.seed = 4;
    const auto r = s_statistic_simulated(cfg, spec, sim);
    ASSERT_TRUE(r.significance.has_value());
    EXPECT_NEAR(r.s_value, s_statistic(cfg).s_value, 5 * r.s_sigma);
    EXPECT_NEAR(*r.significance, violation_significance(r), 1e-12);
    const auto again = s_statistic_simulated(cfg, spec, sim);
    EXPECT_EQ(again.s_value, r.s_value);
}

TEST(Scan, RowsInInputOrder) {
    const auto spec = ExperimentSpec::reference();
    const std::array<double, 3> amps{0.5, 1.0, 1.5};
    BellScanOptions opts;
    opts.restarts = 8;
    opts.threads = 3;
    const auto rows = bell_scan(amps, spec, opts);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(rows[i].amplitude, amps[i]);
        EXPECT_LE(rows[i].s_worst, rows[i].s_nominal);
        EXPECT_FALSE(rows[i].simulated.has_value());
    }
    opts.threads = 1;
    const auto serial = bell_scan(amps, spec, opts);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(serial[i].s_nominal, rows[i].s_nominal);
}
