#include <cmath>

#include <gtest/gtest.h>

#include "freqbin/bessel.hpp"
#include "oracles.hpp"

using freqbin::bessel_j;

TEST(Bessel, TrivialValues) {
    EXPECT_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(bessel_j(3, 0.0), 0.0);
    EXPECT_EQ(bessel_j(-7, 0.0), 0.0);
}

TEST(Bessel, J0AtTwoMatchesSeries) {
    const double expected = oracle::bessel_series(0, 2.0);
    EXPECT_NEAR(expected, 0.223891, 1e-6);
    EXPECT_NEAR(bessel_j(0, 2.0), expected, 1e-14);
}

TEST(Bessel, ThreeTermRecurrence) {
    for (double x : {0.1, 0.5, 1.0, 2.74, 5.48, 10.0}) {
        for (int p = -20; p <= 20; ++p) {
            const double lhs = bessel_j(p - 1, x) + bessel_j(p + 1, x);
            const double rhs = 2.0 * p / x * bessel_j(p, x);
            EXPECT_NEAR(lhs, rhs, 1e-9) << "p=" << p << " x=" << x;
        }
    }
}

TEST(Bessel, ParityIsExact) {
    for (double x : {0.0, 0.3, 1.0, 2.74, 7.5, 23.0, 49.9}) {
        for (int p = 0; p <= 40; ++p) {
            const double sign = (p % 2) ? -1.0 : 1.0;
            EXPECT_EQ(bessel_j(-p, x), sign * bessel_j(p, x));
            EXPECT_EQ(bessel_j(p, -x), sign * bessel_j(p, x));
        }
    }
}

TEST(Bessel, SumRule) {
    for (double x : {0.0, 0.1, 1.0, 2.74, 5.48, 10.0, 25.0, 50.0}) {
        const int P = static_cast<int>(std::ceil(x)) + 20;
        double sum = 0.0;
        for (int p = -P; p <= P; ++p) sum += bessel_j(p, x) * bessel_j(p, x);
        EXPECT_NEAR(sum, 1.0, 1e-12) << "x=" << x;
    }
}

TEST(Bessel, PartialSumsApproachOne) {
    const double x = 4.0;
    double previous = 0.0;
    for (int P = 0; P <= 30; ++P) {
        double sum = 0.0;
        for (int p = -P; p <= P; ++p) sum += bessel_j(p, x) * bessel_j(p, x);
        EXPECT_GE(sum, previous - 1e-15);
        previous = sum;
    }
    EXPECT_NEAR(previous, 1.0, 1e-13);
}

TEST(Bessel, MatchesSeriesOracle) {
    for (double x = -10.0; x <= 10.0; x += 0.125) {
        for (int p = -15; p <= 15; ++p) {
            EXPECT_NEAR(bessel_j(p, x), oracle::bessel_series(p, x), 1e-12)
                << "p=" << p << " x=" << x;
        }
    }
}

TEST(Bessel, MatchesStandardLibraryOnWideDomain) {
    for (double x = 0.25; x <= 50.0; x += 0.75) {
        for (int p = 0; p <= 60; p += 3) {
            EXPECT_NEAR(bessel_j(p, x), std::cyl_bessel_j(static_cast<double>(p), x), 1e-12)
                << "p=" << p << " x=" << x;
        }
    }
}

TEST(Bessel, TableAgreesWithSingleEvaluation) {
    const auto table = freqbin::bessel_j_table(12, 3.3);
    ASSERT_EQ(table.size(), 13u);
    for (int p = 0; p <= 12; ++p) EXPECT_NEAR(table[p], bessel_j(p, 3.3), 1e-15);
}

TEST(Bessel, TailMassComplementsPartialSum) {
    for (double x : {0.5, 2.74, 5.48}) {
        for (int order : {0, 2, 5, 9}) {
            double inside = 0.0;
            for (int p = -order; p <= order; ++p) inside += bessel_j(p, x) * bessel_j(p, x);
            EXPECT_NEAR(freqbin::bessel_tail_mass(order, x), 1.0 - inside, 1e-13);
        }
    }
    EXPECT_GE(freqbin::bessel_tail_mass(30, 2.74), 0.0);
    EXPECT_LT(freqbin::bessel_tail_mass(30, 2.74), 1e-30);
}

TEST(Bessel, ZerosOfJ0) {
    EXPECT_NEAR(freqbin::bessel_j0_zero(1), freqbin::kFirstZeroJ0, 1e-13);
    EXPECT_NEAR(freqbin::bessel_j0_zero(2), 5.520078110286311, 1e-12);
    EXPECT_NEAR(bessel_j(0, freqbin::bessel_j0_zero(3)), 0.0, 1e-14);
    EXPECT_THROW(freqbin::bessel_j0_zero(0), std::invalid_argument);
}

TEST(Bessel, OutsideValidatedDomainThrows) {
    EXPECT_THROW(bessel_j(0, 50.5), freqbin::DomainError);
    EXPECT_THROW(bessel_j(2, -1e3), freqbin::DomainError);
    EXPECT_THROW(bessel_j(0, std::nan("")), freqbin::DomainError);
    EXPECT_NO_THROW(bessel_j(0, 50.0));
}
