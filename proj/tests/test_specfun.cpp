#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tumor/specfun.hpp"

namespace sf = tumor::specfun;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST(P0, SmallArgumentLimit) {
    const double r = 1e-8;
    EXPECT_NEAR(sf::p0(r), 1.0 / 3.0 - r * r / 45.0, 1e-17);
}

TEST(P0, UnitArgument) {
    // coth(1) - 1, 40-digit reference
    EXPECT_LE(rel_err(sf::p0(1.0), 0.3130352854993313036), 1e-15);
    EXPECT_LE(rel_err(sf::p0(1.0), oracle::p0_closed(1.0)), 1e-13);
}

TEST(P0, LargeArgumentIsExactInDoubles) {
    EXPECT_EQ(sf::p0(50.0), 1.0 / 50.0 - 1.0 / 2500.0);
}

TEST(P0, RelativeErrorAgainstExtendedPrecision) {
    for (double r : oracle::logspace(1e-6, 1e4, 400)) {
        EXPECT_LE(rel_err(sf::p0(r), oracle::p0_closed(r)), 1e-13) << "r = " << r;
    }
}

TEST(P0, RejectsBadArguments) {
    EXPECT_THROW(sf::p0(0.0), tumor::DomainError);
    EXPECT_THROW(sf::p0(-1.0), tumor::DomainError);
    EXPECT_THROW(sf::p0(std::nan("")), tumor::DomainError);
    EXPECT_THROW(sf::p0(INFINITY), tumor::DomainError);
}

TEST(Pn, AgreesWithP0) {
    for (double r : {0.1, 1.0, 5.0, 20.0}) {
        EXPECT_LE(rel_err(sf::pn(0, r), sf::p0(r)), 1e-13) << "r = " << r;
    }
}

TEST(Pn, SmallArgumentLimit) {
    for (int n = 1; n <= 10; ++n) {
        EXPECT_NEAR(sf::pn(n, 1e-8), 1.0 / (2 * n + 3), 1e-16) << "n = " << n;
    }
}

TEST(Pn, RecurrenceIdentityWithP1) {
    for (double r : {0.5, 2.0, 10.0}) {
        const double p1 = sf::pn(1, r);
        EXPECT_LE(rel_err(sf::p0(r), 1.0 / (r * r * p1 + 3.0)), 1e-13) << "r = " << r;
    }
}

TEST(Pn, MatchesHighPrecisionOracle) {
    for (int n : {0, 1, 2, 3, 5, 8, 13, 20, 32, 64}) {
        for (double r : oracle::logspace(1e-4, 1e3, 60)) {
            EXPECT_LE(rel_err(sf::pn(n, r), oracle::pn(n, r)), 1e-12) << "n = " << n << " r = " << r;
        }
    }
}

TEST(Pn, BranchBoundariesAreContinuous) {
    // series / continued fraction / Hankel switch points
    for (int n : {0, 3, 10}) {
        for (double r : {sf::kSeriesSwitch, 40.0, double((n + 1) * (n + 2))}) {
            const double below = sf::pn(n, std::nextafter(r, 0.0));
            const double above = sf::pn(n, std::nextafter(r, INFINITY));
            EXPECT_LE(rel_err(below, above), 1e-13) << "n = " << n << " r = " << r;
        }
    }
}

TEST(Pn, OrderLimits) {
    EXPECT_THROW(sf::pn(65, 1.0), tumor::CapabilityError);
    EXPECT_NO_THROW(sf::pn(65, 1.0, 80));
    EXPECT_THROW(sf::pn(-1, 1.0), tumor::DomainError);
    EXPECT_THROW(sf::pn(2, 0.0), tumor::DomainError);
}

TEST(PnDerivative, NegativeForP0) {
    for (double r : {0.1, 1.0, 10.0}) EXPECT_LT(sf::pn_derivative(0, r), 0.0);
}

TEST(PnDerivative, SmallArgumentSlope) {
    const double r = 1e-6;
    EXPECT_NEAR(sf::pn_derivative(0, r), -2.0 * r / 45.0, 1e-7);
    EXPECT_LE(rel_err(sf::pn_derivative(0, r), -2.0 * r / 45.0), 1e-9);
}

TEST(PnDerivative, MatchesFiniteDifference) {
    const double h = 1e-5;
    const double fd = (sf::pn(2, 3.0 + h) - sf::pn(2, 3.0 - h)) / (2 * h);
    EXPECT_LE(rel_err(sf::pn_derivative(2, 3.0), fd), 1e-6);
}

TEST(PnDerivative, MatchesOracleDifferences) {
    for (int n : {0, 1, 4, 20}) {
        for (double r : oracle::logspace(1e-2, 5e2, 25)) {
            const double h = 1e-3 * r;
            const double fd = oracle::central_diff([n](double x) { return oracle::pn(n, x); }, r, h);
            EXPECT_LE(rel_err(sf::pn_derivative(n, r), fd), 1e-6) << "n = " << n << " r = " << r;
        }
    }
}

TEST(P0Inverse, RoundTrip) { EXPECT_NEAR(sf::p0_inverse(sf::p0(2.0)), 2.0, 1e-10); }

TEST(P0Inverse, LargeRadiusBranch) {
    const double r = sf::p0_inverse(1e-3);
    EXPECT_LE(std::abs(sf::p0(r) - 1e-3), 1e-12);
    const double ref = oracle::bisect([](double x) { return oracle::p0_closed(x) - 1e-3; }, 1e-8, 1e4);
    EXPECT_LE(rel_err(r, ref), 1e-10);
}

TEST(P0Inverse, MidRange) {
    // root of coth(r)/r - 1/r^2 = 0.3; 40-digit reference 1.3219987430997790569
    const double r = sf::p0_inverse(0.3);
    EXPECT_LE(std::abs(sf::p0(r) - 0.3), 1e-12);
    EXPECT_NEAR(r, 1.3219987430997790569, 1e-12);
    const double ref = oracle::bisect([](double x) { return oracle::p0_closed(x) - 0.3; }, 1e-8, 1e4);
    EXPECT_NEAR(r, ref, 1e-12);
}

TEST(P0Inverse, ResidualAcrossRange) {
    for (double y : oracle::logspace(1e-9, 0.333, 80)) {
        EXPECT_LE(std::abs(sf::p0(sf::p0_inverse(y)) - y), 1e-12) << "y = " << y;
    }
}

TEST(P0Inverse, RejectsOutOfRange) {
    EXPECT_THROW(sf::p0_inverse(0.0), tumor::DomainError);
    EXPECT_THROW(sf::p0_inverse(1.0 / 3.0), tumor::DomainError);
    EXPECT_THROW(sf::p0_inverse(-0.1), tumor::DomainError);
}

// Grid properties: n in [0, 20], 200 log-spaced r in [1e-4, 1e3].
class PnGrid : public ::testing::Test {
protected:
    std::vector<double> grid = oracle::logspace(1e-4, 1e3, 200);
};

TEST_F(PnGrid, BoundedByReciprocalOfTwoNPlusThree) {
    for (int n = 0; n <= 20; ++n) {
        for (double r : grid) {
            const double p = sf::pn(n, r);
            EXPECT_GT(p, 0.0);
            EXPECT_LE(p, 1.0 / (2 * n + 3));
        }
    }
}

TEST_F(PnGrid, StrictlyDecreasingInOrderAndArgument) {
    for (int n = 0; n <= 20; ++n) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            EXPECT_GT(sf::pn(n, grid[i]), sf::pn(n + 1, grid[i]));
            if (i > 0) EXPECT_GT(sf::pn(n, grid[i - 1]), sf::pn(n, grid[i]));
        }
    }
}

TEST_F(PnGrid, P0P1Identity) {
    for (double r : grid) {
        EXPECT_LE(std::abs(sf::p0(r) * (r * r * sf::pn(1, r) + 3.0) - 1.0), 1e-11);
    }
}

TEST_F(PnGrid, ContinuedFractionRecurrence) {
    for (int n = 0; n <= 20; ++n) {
        const double nu = n + 0.5;
        for (double r : grid) {
            const double lhs = sf::bessel_ratio(nu, r);
            const double rhs = 1.0 / (2.0 * (nu + 1.0) / r + sf::bessel_ratio(nu + 1.0, r));
            EXPECT_LE(rel_err(lhs, rhs), 1e-12);
        }
    }
}
