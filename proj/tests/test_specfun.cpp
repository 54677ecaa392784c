#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "sparsedet/oracles.hpp"
#include "sparsedet/rng.hpp"
#include "sparsedet/specfun.hpp"

using namespace sparsedet;
namespace sf = sparsedet::specfun;

namespace {

// Solve oracle::gaussian_q(x) = p by bisection.
double oracle_q_inverse(double p)
{
    double lo = -10.0;
    double hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (oracle::gaussian_q(mid) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double sankaran_central_formula(double k, double x)
{
    const double v = 2.0 / (9.0 * k);
    return 1.0 - oracle::gaussian_q((std::cbrt(x / k) - (1.0 - v)) / std::sqrt(v));
}

}  // namespace

TEST(TailProb, ClampsRoundingAndRejectsOutOfRange)
{
    EXPECT_EQ(sf::TailProb(1.0 + 1e-13).value(), 1.0);
    EXPECT_EQ(sf::TailProb(-1e-13).value(), 0.0);
    EXPECT_THROW(sf::TailProb(1.1), std::domain_error);
    EXPECT_THROW(sf::TailProb(std::nan("")), std::domain_error);
    EXPECT_THROW(sf::TailProb(0.3, 0.6), std::domain_error);
}

TEST(GaussianQ, SpecExamples)
{
    EXPECT_DOUBLE_EQ(sf::gaussian_q(0.0).value(), 0.5);
    const double far = sf::gaussian_q(40.0).value();
    EXPECT_GE(far, 0.0);
    EXPECT_LT(far, 1e-300);
    EXPECT_NEAR(sf::gaussian_q(1.6449).value(), oracle::gaussian_q(1.6449), 1e-10);
    EXPECT_NEAR(sf::gaussian_q(1.6449).value(), 0.05, 1e-4);
}

TEST(GaussianQ, RejectsNonFinite)
{
    EXPECT_THROW(sf::gaussian_q(INFINITY), std::domain_error);
    EXPECT_THROW(sf::gaussian_q(std::nan("")), std::domain_error);
}

TEST(GaussianQ, StrictlyDecreasingAndMatchesQuadrature)
{
    double previous = 2.0;
    for (double x = -8.0; x <= 8.0; x += 0.05) {
        const double q = sf::gaussian_q(x).value();
        EXPECT_LT(q, previous);
        EXPECT_NEAR(q, oracle::gaussian_q(x), 1e-10) << "x=" << x;
        previous = q;
    }
}

TEST(GaussianQInv, SpecExamples)
{
    EXPECT_DOUBLE_EQ(sf::gaussian_q_inv(0.5), 0.0);
    EXPECT_NEAR(sf::gaussian_q_inv(sf::gaussian_q(1.3)), 1.3, 1e-10);
    EXPECT_NEAR(sf::gaussian_q_inv(0.05), oracle_q_inverse(0.05), 1e-8);
    EXPECT_NEAR(sf::gaussian_q_inv(0.05), 1.6449, 1e-4);
}

TEST(GaussianQInv, RoundTripOnWideGrid)
{
    for (double x = -8.0; x <= 8.0; x += 0.01) {
        EXPECT_NEAR(sf::gaussian_q_inv(sf::gaussian_q(x)), x, 1e-10) << "x=" << x;
    }
    for (const double p : {1e-12, 1e-6, 0.01, 0.3, 0.7, 0.99}) {
        EXPECT_NEAR(sf::gaussian_q(sf::gaussian_q_inv(p)).value(), p, 1e-10 * std::max(p, 1e-3));
    }
}

TEST(GaussianQInv, DomainErrors)
{
    EXPECT_THROW(sf::gaussian_q_inv(0.0), std::domain_error);
    EXPECT_THROW(sf::gaussian_q_inv(1.0), std::domain_error);
}

TEST(RegGamma, SpecExamples)
{
    EXPECT_EQ(sf::reg_lower_gamma(2.5, 0.0).value(), 0.0);
    EXPECT_NEAR(sf::reg_lower_gamma(1.0, 1.0).value(), 1.0 - std::exp(-1.0), 1e-14);
    EXPECT_NEAR(sf::reg_lower_gamma(2.5, 2.0).value(), oracle::reg_lower_gamma(2.5, 2.0), 1e-10);
    EXPECT_THROW(sf::reg_lower_gamma(0.0, 1.0), std::domain_error);
    EXPECT_THROW(sf::reg_lower_gamma(-1.0, 1.0), std::domain_error);
}

TEST(RegGamma, QuadratureGridAndComplement)
{
    for (const double a : {0.3, 1.0, 2.5, 7.0, 25.0, 100.0}) {
        for (const double x : {0.01, 0.5, 2.0, 8.0, 30.0, 120.0}) {
            const double lower = sf::reg_lower_gamma(a, x).value();
            EXPECT_NEAR(lower, oracle::reg_lower_gamma(a, x), 1e-10) << a << " " << x;
            EXPECT_NEAR(lower + sf::reg_upper_gamma(a, x).value(), 1.0, 1e-14);
        }
    }
    EXPECT_NEAR(sf::reg_lower_gamma(3.0, 1e4).value(), 1.0, 1e-15);
}

TEST(MarcumQ, SpecExamples)
{
    EXPECT_NEAR(sf::marcum_q(3.0, 1.2, 0.0).value(), 1.0, 1e-15);
    EXPECT_NEAR(sf::marcum_q(1.0, 0.0, 2.0).value(), std::exp(-2.0), 1e-14);
    EXPECT_NEAR(sf::marcum_q(1.0, 1.0, 2.0).value(), oracle::marcum_q(1.0, 1.0, 2.0), 1e-8);
    EXPECT_THROW(sf::marcum_q(1.0, -1.0, 2.0), std::domain_error);
    EXPECT_THROW(sf::marcum_q(1.0, 1.0, -2.0), std::domain_error);
    EXPECT_THROW(sf::marcum_q(0.5, 1.0, 2.0), std::domain_error);
}

TEST(MarcumQ, MatchesDefiningIntegralAndIsMonotone)
{
    for (const double order : {1.0, 1.5, 2.5, 5.0, 12.5}) {
        double prev_b = 2.0;
        for (double b = 0.0; b <= 8.0; b += 0.25) {
            const double q = sf::marcum_q(order, 1.5, b).value();
            EXPECT_LE(q, prev_b + 1e-15);
            prev_b = q;
            EXPECT_NEAR(q, oracle::marcum_q(order, 1.5, b), 1e-8) << order << " " << b;
        }
        double prev_a = -1.0;
        for (double a = 0.0; a <= 6.0; a += 0.25) {
            const double q = sf::marcum_q(order, a, 3.0).value();
            EXPECT_GE(q, prev_a - 1e-15);
            prev_a = q;
        }
    }
}

TEST(Chi2, SpecExamples)
{
    EXPECT_NEAR(sf::chi2_cdf(2.0, 2.0).value(), 1.0 - std::exp(-1.0), 1e-14);
    EXPECT_EQ(sf::chi2_cdf(5.0, 0.0).value(), 0.0);
    EXPECT_NEAR(sf::chi2_cdf(5.0, 4.3).value(), oracle::reg_lower_gamma(2.5, 2.15), 1e-10);
    EXPECT_THROW(sf::chi2_cdf(0.0, 1.0), std::domain_error);
}

TEST(NoncentralChi2, SpecExamples)
{
    EXPECT_NEAR(sf::ncchi2_cdf(4.0, 0.0, 3.0).value(), sf::chi2_cdf(4.0, 3.0).value(), 1e-15);
    EXPECT_EQ(sf::ncchi2_cdf(4.0, 2.0, 0.0).value(), 0.0);
    EXPECT_NEAR(sf::ncchi2_cdf(10.0, 6.0, 12.0).value(), oracle::ncchi2_cdf_series(10.0, 6.0, 12.0, 1e-14), 1e-12);
    EXPECT_THROW(sf::ncchi2_cdf(4.0, -1.0, 3.0), std::domain_error);
}

TEST(NoncentralChi2, LargeNoncentralityAgainstSeries)
{
    for (const double lambda : {100.0, 500.0, 2000.0}) {
        for (const double frac : {0.7, 1.0, 1.3}) {
            const double x = frac * (20.0 + lambda);
            EXPECT_NEAR(sf::ncchi2_cdf(20.0, lambda, x).value(), oracle::ncchi2_cdf_series(20.0, lambda, x, 1e-14),
                        1e-11);
        }
    }
}

TEST(NoncentralChi2, ComplementIdentityOnRandomTriples)
{
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const double df = 2.0 + static_cast<double>(rng.below(80));
        const double lambda = rng.uniform(0.0, 100.0);
        const double x = rng.uniform(0.0, 250.0);
        EXPECT_NEAR(1.0 - sf::ncchi2_cdf(df, lambda, x).value(),
                    sf::marcum_q(0.5 * df, std::sqrt(lambda), std::sqrt(x)).value(), 1e-8);
    }
}

TEST(Cdfs, NondecreasingOnFineGrid)
{
    for (const double df : {1.0, 5.0, 30.0}) {
        for (const double lambda : {0.0, 4.0, 40.0}) {
            const double top = 3.0 * (df + lambda) + 20.0;
            double prev_exact = -1.0;
            double prev_nc_approx = -INFINITY;
            double prev_central = -1.0;
            for (int i = 0; i < 1000; ++i) {
                const double x = top * i / 999.0;
                const double exact = sf::ncchi2_cdf(df, lambda, x).value();
                const double approx = sf::ncchi2_cdf_sankaran(df, lambda, x);
                const double central = sf::chi2_cdf(df, x).value();
                EXPECT_GE(exact, prev_exact);
                EXPECT_GE(approx, prev_nc_approx);
                EXPECT_GE(central, prev_central);
                prev_exact = exact;
                prev_nc_approx = approx;
                prev_central = central;
            }
        }
    }
}

TEST(Sankaran, CentralDirectSubstitution)
{
    EXPECT_NEAR(sf::chi2_cdf_sankaran(9.0, 9.0), 0.5624, 1e-4);
    EXPECT_NEAR(sf::chi2_cdf_sankaran(9.0, 9.0), 1.0 - oracle::gaussian_q(std::sqrt(2.0 / 81.0)), 1e-12);
}

TEST(Sankaran, CentralBoundaryIsNotClamped)
{
    const double at_zero = sf::chi2_cdf_sankaran(50.0, 0.0);
    EXPECT_NEAR(at_zero, sankaran_central_formula(50.0, 0.0), 1e-14);
    EXPECT_TRUE(std::isfinite(at_zero));
}

TEST(Sankaran, CentralSweepAgainstExact)
{
    double worst = 0.0;
    for (int df = 5; df <= 200; ++df) {
        for (int i = 0; i <= 300; ++i) {
            const double x = 3.0 * df * i / 300.0;
            worst = std::max(worst, std::abs(sf::chi2_cdf_sankaran(df, x) - sf::chi2_cdf(df, x).value()));
        }
    }
    EXPECT_LT(worst, 0.02);
}

TEST(Sankaran, NoncentralReducesToCentral)
{
    EXPECT_NEAR(sf::ncchi2_cdf_sankaran(10.0, 0.0, 10.0), sf::chi2_cdf_sankaran(10.0, 10.0), 1e-9);
    for (const double df : {3.0, 17.0, 80.0}) {
        for (const double x : {0.5 * df, df, 2.0 * df}) {
            EXPECT_NEAR(sf::ncchi2_cdf_sankaran(df, 0.0, x), sf::chi2_cdf_sankaran(df, x), 1e-9);
        }
    }
}

TEST(Sankaran, NoncentralHandSubstitution)
{
    EXPECT_NEAR(sf::ncchi2_cdf_sankaran(50.0, 20.0, 80.0), oracle::ncchi2_sankaran_cdf(50.0, 20.0, 80.0), 1e-12);
}

TEST(Sankaran, NoncentralSweepAgainstExact)
{
    double worst = 0.0;
    for (int df = 5; df <= 100; df += 5) {
        for (int j = 0; j <= 20; ++j) {
            const double lambda = 10.0 * df * j / 20.0;
            const double top = 3.0 * (df + lambda);
            for (int i = 0; i <= 60; ++i) {
                const double x = top * i / 60.0;
                worst = std::max(worst, std::abs(sf::ncchi2_cdf_sankaran(df, lambda, x) -
                                                 sf::ncchi2_cdf(df, lambda, x).value()));
            }
        }
    }
    EXPECT_LT(worst, 0.02);
}
