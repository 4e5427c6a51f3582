#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "freqbin/bessel.hpp"
#include "freqbin/modulator.hpp"
#include "oracles.hpp"

using namespace freqbin;

TEST(ModulatorSettings, NegativeAmplitudeFoldsIntoPhase) {
    const ModulatorSettings s(-1.2, 0.4);
    EXPECT_EQ(s.amplitude(), 1.2);
    EXPECT_NEAR(s.rf_phase(), 0.4 + std::numbers::pi, 1e-15);
}

TEST(ModulatorSettings, PhaseIsReduced) {
    EXPECT_NEAR(ModulatorSettings(1.0, 7.0).rf_phase(), 7.0 - 2 * std::numbers::pi, 1e-15);
    EXPECT_NEAR(ModulatorSettings(1.0, -0.5).rf_phase(), 2 * std::numbers::pi - 0.5, 1e-15);
    const double tiny = ModulatorSettings(1.0, -1e-18).rf_phase();
    EXPECT_GE(tiny, 0.0);
    EXPECT_LT(tiny, 2 * std::numbers::pi);
}

TEST(ModulatorSettings, RejectsNonsense) {
    EXPECT_THROW(ModulatorSettings(std::nan(""), 0.0), std::invalid_argument);
    EXPECT_THROW(ModulatorSettings(1.0, std::numeric_limits<double>::infinity()),
                 std::invalid_argument);
    EXPECT_THROW(ModulatorSettings(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST(ModulatorSettings, NegatedDriveIsSamePhysicalDrive) {
    const ModulatorSettings a(-0.8, 1.1);
    const ModulatorSettings b(0.8, 1.1 + std::numbers::pi);
    EXPECT_EQ(a.amplitude(), b.amplitude());
    EXPECT_NEAR(a.rf_phase(), b.rf_phase(), 1e-15);
}

TEST(ModulatorSettings, VoltageConversion) {
    EXPECT_NEAR(amplitude_from_voltage(3.0, 3.0), std::numbers::pi, 1e-15);
    EXPECT_THROW(amplitude_from_voltage(1.0, 0.0), std::invalid_argument);
}

TEST(ModulatorSettings, AccessibleRangeFlag) {
    EXPECT_TRUE(within_accessible_range(ModulatorSettings(2.74, 0.0)));
    EXPECT_FALSE(within_accessible_range(ModulatorSettings(3.0, 0.0)));
}

TEST(Sideband, ZeroDriveIsIdentity) {
    for (double alpha : {0.0, 1.0, 4.0}) {
        const ModulatorSettings s(0.0, alpha);
        EXPECT_EQ(sideband_coefficient(s, 0).value, std::complex<double>(1.0, 0.0));
        for (int p : {-3, -1, 1, 2, 5}) EXPECT_EQ(std::abs(sideband_coefficient(s, p).value), 0.0);
    }
}

TEST(Sideband, FirstOrderAtReferenceAmplitude) {
    const auto c = sideband_coefficient(ModulatorSettings(2.74, 0.0), 1);
    const double j1 = oracle::bessel_series(1, 2.74);
    EXPECT_EQ(c.order, 1);
    EXPECT_NEAR(c.value.real(), 0.0, 1e-15);
    EXPECT_NEAR(c.value.imag(), -j1, 1e-13);
}

TEST(Sideband, MatchesFormulaAndMagnitudeIgnoresPhase) {
    for (double a : {0.3, 1.0, 2.74}) {
        for (double alpha : {0.0, 0.7, 2.5, 5.9}) {
            const ModulatorSettings s(a, alpha);
            for (int p = -6; p <= 6; ++p) {
                const auto expected = std::polar(1.0, p * (alpha - std::numbers::pi / 2)) *
                                      oracle::bessel_series(p, a);
                const auto got = sideband_coefficient(s, p).value;
                EXPECT_NEAR(std::abs(got - expected), 0.0, 1e-12);
                EXPECT_NEAR(std::abs(got), std::fabs(bessel_j(p, a)), 1e-15);
                EXPECT_LE(std::abs(got), 1.0);
            }
        }
    }
}

TEST(Sideband, VectorAgreesWithSingleCoefficients) {
    const ModulatorSettings s(1.7, 2.2);
    const auto all = sideband_coefficients(s, 8);
    ASSERT_EQ(all.size(), 17u);
    for (int p = -8; p <= 8; ++p) {
        EXPECT_NEAR(std::abs(all[p + 8] - sideband_coefficient(s, p).value), 0.0, 1e-15);
    }
}

TEST(Sideband, UnitarityOfShifts) {
    // sum_p U_p(a) conj(U_{p+k}(a)) = delta_k0
    const ModulatorSettings s(2.0, 0.9);
    const int P = default_truncation(2.0);
    const auto u = sideband_coefficients(s, P + 3);
    for (int k = 0; k <= 3; ++k) {
        std::complex<double> sum = 0.0;
        for (int p = -P; p <= P; ++p) sum += u[p + P + 3] * std::conj(u[p + k + P + 3]);
        EXPECT_NEAR(std::abs(sum - (k == 0 ? 1.0 : 0.0)), 0.0, 1e-13) << k;
    }
}

TEST(Spectrum, ZeroDrive) {
    const auto lines = sideband_spectrum(ModulatorSettings(0.0, 0.0), 5);
    ASSERT_EQ(lines.size(), 11u);
    for (const auto& l : lines) EXPECT_EQ(l.intensity, l.order == 0 ? 1.0 : 0.0);
}

TEST(Spectrum, ElevenLinesAtReferenceAmplitude) {
    const auto lines = sideband_spectrum(ModulatorSettings(2.74, 0.0), 5);
    ASSERT_EQ(lines.size(), 11u);
    int p = -5;
    for (const auto& l : lines) {
        EXPECT_EQ(l.order, p++);
        EXPECT_GT(l.intensity, 0.0);
    }
    double total = 0.0;
    for (const auto& l : lines) total += l.intensity;
    EXPECT_LE(total, 1.0);
}

TEST(Spectrum, SumRule) {
    double total = 0.0;
    for (const auto& l : sideband_spectrum(ModulatorSettings(1.0, 0.3), 10)) total += l.intensity;
    EXPECT_GE(total, 1.0 - 1e-10);
    EXPECT_LE(total, 1.0 + 1e-12);
}

TEST(Spectrum, RejectsEmptyRange) {
    EXPECT_THROW(sideband_spectrum(ModulatorSettings(1.0, 0.0), 0), std::invalid_argument);
}

TEST(Sideband, PropagatesDomainError) {
    EXPECT_THROW(sideband_coefficient(ModulatorSettings(60.0, 0.0), 1), DomainError);
}
