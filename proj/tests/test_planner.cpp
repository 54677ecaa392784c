#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "sparsedet/harness.hpp"
#include "sparsedet/oracles.hpp"
#include "sparsedet/planner.hpp"

using namespace sparsedet;

namespace {

TheoryInputs base_inputs(int k, int L, double c_r, double sigma2, CoefficientRange range, int N = 256)
{
    TheoryInputs in;
    in.t = 1;
    in.k = k;
    in.L = L;
    in.N = N;
    in.M = rows_for_compression(c_r, N);
    in.sigma2 = sigma2;
    in.gamma.assign(static_cast<std::size_t>(L), k * range.mean_square() / sigma2);
    in.alpha = 0.05;
    in.tau_d = 0.9;
    return in;
}

// The cube-root approximation chain, written out independently.
double f_by_hand(double t, const TheoryInputs& in)
{
    double gsum = 0.0;
    for (const double g : in.gamma) gsum += g;
    const double lambda = (in.M * t / (static_cast<double>(in.N) * in.k)) * (1.0 + (in.k - t) / in.M) * gsum;
    const double dof = t * in.L;
    const double v = 2.0 / (9.0 * dof);
    double z = 0.0;
    {
        double lo = -40.0;
        double hi = 40.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (oracle::gaussian_q(mid) > in.alpha ? lo : hi) = mid;
        }
        z = 0.5 * (lo + hi);
    }
    const double base = (1.0 - v) + std::sqrt(v) * z;
    const double x = std::max(0.0, dof * base * base * base);
    const double h = 1.0 - (2.0 / 3.0) * (dof + lambda) * (dof + 3.0 * lambda) / std::pow(dof + 2.0 * lambda, 2);
    const double p = (dof + 2.0 * lambda) / std::pow(dof + lambda, 2);
    const double m = (h - 1.0) * (1.0 - 3.0 * h);
    return (std::pow(x / (dof + lambda), h) - (1.0 + h * p * (h - 1.0 - 0.5 * (2.0 - h) * m * p))) /
           (h * std::sqrt(2.0 * p) * (1.0 + 0.5 * m * p));
}

}  // namespace

TEST(FOfT, HandSubstitution)
{
    const auto in = base_inputs(5, 5, 0.1, 1.0, {3.0, 4.0});
    for (const double t : {1.0, 2.5, 4.0}) {
        EXPECT_NEAR(f_of_t(t, in), f_by_hand(t, in), 1e-9);
    }
}

TEST(FOfT, NullSignalCollapsesToAlpha)
{
    auto in = base_inputs(6, 4, 0.1, 1.0, {3.0, 4.0});
    in.gamma.assign(4, 0.0);
    for (const double t : {1.0, 2.0, 3.3, 6.0}) {
        EXPECT_NEAR(pd_approx(t, in), in.alpha, 1e-10);
    }
}

TEST(FOfT, ApproximationChainTracksExactTheory)
{
    // Small-figure regime: N=256, L=10, c_r=0.1, k=10.
    const auto in = base_inputs(10, 10, 0.1, 2.0, {3.5, 3.5});
    for (int t = 1; t <= in.k; ++t) {
        const double tau = threshold_sankaran(in.alpha, t, in.L, in.sigma2);
        const double exact = pd_theoretical(tau, noncentrality_approx(t, in), t, in.L, in.sigma2).value();
        EXPECT_NEAR(pd_approx(t, in), exact, 0.03) << "t=" << t;
    }
}

TEST(FPrime, NegativeAcrossSparseRegime)
{
    const auto in = base_inputs(10, 10, 0.1, 1.0, {3.0, 4.0});
    for (double t = 1.0; t <= 9.0; t += 0.25) {
        EXPECT_LT(f_prime(t, in), 0.0) << "t=" << t;
    }
}

TEST(FPrime, ChangesSignInDenseRegime)
{
    const auto in = base_inputs(20, 10, 0.1, 5.0, {3.0, 4.0});
    bool negative = false;
    bool positive = false;
    for (double t = 1.0; t < 20.0; t += 0.25) {
        const double d = f_prime(t, in);
        negative = negative || d < 0.0;
        positive = positive || d > 0.0;
    }
    EXPECT_TRUE(negative);
    EXPECT_TRUE(positive);
}

TEST(FPrime, FlatWhenSignalVanishes)
{
    auto in = base_inputs(5, 5, 0.1, 1.0, {3.0, 4.0});
    in.gamma.assign(5, 0.0);
    for (const double t : {1.0, 2.0, 4.5, 5.0}) {
        EXPECT_LT(std::abs(f_prime(t, in)), 1e-6);
    }
}

TEST(FPrime, RejectsOutsideRange)
{
    const auto in = base_inputs(5, 5, 0.1, 1.0, {3.0, 4.0});
    EXPECT_THROW(f_prime(0.5, in), std::invalid_argument);
    EXPECT_THROW(f_prime(5.5, in), std::invalid_argument);
}

TEST(SolveMinFraction, EasyProblemAchievedAtOne)
{
    auto in = base_inputs(5, 5, 0.3, 0.1, {3.0, 4.0});
    in.tau_d = 0.5;
    const auto r = solve_min_fraction(in);
    EXPECT_EQ(r.status, PlannerStatus::AchievedAtOne);
    EXPECT_EQ(r.t_hat, 1);
    EXPECT_DOUBLE_EQ(*r.fraction, 0.2);
}

TEST(SolveMinFraction, CompressionAnchor)
{
    // N=256, L=5, sigma2=1, k=5, magnitudes in [3,4], tau_d=0.9: one index at
    // c_r=0.2, four indices at c_r=0.1.
    bool found = false;
    for (const double alpha : {0.05, 0.1}) {
        auto wide = base_inputs(5, 5, 0.2, 1.0, {3.0, 4.0});
        auto narrow = base_inputs(5, 5, 0.1, 1.0, {3.0, 4.0});
        wide.alpha = narrow.alpha = alpha;
        found = found || (solve_min_fraction(wide).t_hat == 1 && solve_min_fraction(narrow).t_hat == 4);
    }
    EXPECT_TRUE(found);
}

TEST(SolveMinFraction, InteriorRootResidualAndGridScan)
{
    auto in = base_inputs(5, 5, 0.1, 1.0, {3.0, 4.0});
    for (const double tau_d : {0.7, 0.8, 0.9}) {
        in.tau_d = tau_d;
        const auto r = solve_min_fraction(in);
        ASSERT_EQ(r.status, PlannerStatus::Interior);
        const double root = *r.t_continuous;
        EXPECT_GT(root, 1.0);
        EXPECT_LT(root, 5.0);
        EXPECT_LT(std::abs(pd_approx(root, in) - tau_d), 1e-8);
        // First grid point reaching tau_d on a 1e4-point scan lies next to the root.
        const int n = 10000;
        double first = -1.0;
        for (int i = 0; i < n; ++i) {
            const double t = 1.0 + 4.0 * i / (n - 1);
            if (pd_approx(t, in) >= tau_d) {
                first = t;
                break;
            }
        }
        EXPECT_NEAR(first, root, 4.0 / (n - 1) + 1e-9);
    }
}

TEST(SolveMinFraction, InfeasibleAbovePeak)
{
    auto in = base_inputs(20, 10, 0.1, 5.0, {3.0, 4.0});
    in.tau_d = 0.5;
    const double peak = solve_min_fraction(in).pd_max_scanned;
    in.tau_d = std::min(0.999, peak + 0.01);
    const auto r = solve_min_fraction(in);
    EXPECT_EQ(r.status, PlannerStatus::Infeasible);
    EXPECT_FALSE(r.t_hat.has_value());
    EXPECT_FALSE(r.t_continuous.has_value());
}

TEST(SolveMinFraction, RejectsTrivialSparsity)
{
    auto in = base_inputs(5, 5, 0.1, 1.0, {3.0, 4.0});
    in.k = 1;
    EXPECT_THROW(solve_min_fraction(in), std::invalid_argument);
}

TEST(SolveMinFraction, BranchExclusivityAndRange)
{
    for (const double sigma2 : {0.3, 1.0, 3.0, 10.0}) {
        for (const double c_r : {0.05, 0.1, 0.2, 0.4}) {
            for (const double tau_d : {0.1, 0.5, 0.8, 0.95, 0.99}) {
                auto in = base_inputs(8, 5, c_r, sigma2, {3.0, 4.0});
                in.tau_d = tau_d;
                const auto r = solve_min_fraction(in);
                const bool at_one = tau_d <= pd_approx(1.0, in);
                EXPECT_EQ(r.status == PlannerStatus::AchievedAtOne, at_one);
                if (r.status == PlannerStatus::Infeasible) {
                    EXPECT_FALSE(r.t_hat.has_value());
                }
                else {
                    EXPECT_GE(*r.t_hat, 1);
                    EXPECT_LE(*r.t_hat, in.k - 1);
                }
                if (r.status == PlannerStatus::AchievedAtOne) {
                    EXPECT_EQ(*r.t_hat, 1);
                }
                if (r.status == PlannerStatus::Interior) {
                    EXPECT_GT(*r.t_continuous, 1.0);
                    EXPECT_LT(*r.t_continuous, in.k);
                }
            }
        }
    }
}

TEST(SolveMinFraction, StrongerSignalNeverNeedsMoreIndices)
{
    for (const double c_r : {0.05, 0.1, 0.2}) {
        for (const double tau_d : {0.6, 0.8, 0.9, 0.95}) {
            auto in = base_inputs(8, 5, c_r, 1.0, {3.0, 4.0});
            in.tau_d = tau_d;
            std::optional<int> previous;
            bool previous_feasible = false;
            for (double scale = 0.25; scale <= 4.0; scale *= 1.25) {
                auto cell = in;
                for (auto& g : cell.gamma) g *= scale;
                const auto r = solve_min_fraction(cell);
                if (previous_feasible) {
                    ASSERT_TRUE(r.t_hat.has_value()) << "feasibility lost at scale " << scale;
                    EXPECT_LE(*r.t_hat, *previous) << "scale " << scale;
                }
                previous = r.t_hat;
                previous_feasible = r.t_hat.has_value();
            }
        }
    }
}

TEST(MinFractionMap, MonotoneInTargetAndEasyAtLargeAlpha)
{
    const auto in = base_inputs(5, 5, 0.1, 1.0, {3.0, 4.0});
    const std::vector<double> taus{0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99};
    const std::vector<double> alphas{0.01, 0.05, 0.1, 0.2, 0.999};
    const auto map = min_fraction_map(taus, alphas, in);
    ASSERT_EQ(map.size(), taus.size());
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        int previous = 0;
        bool infeasible = false;
        for (std::size_t t = 0; t < taus.size(); ++t) {
            const auto& r = map[t][a];
            if (!r.t_hat) {
                infeasible = true;
                continue;
            }
            EXPECT_FALSE(infeasible) << "feasible cell after an infeasible one";
            EXPECT_GE(*r.t_hat, previous);
            previous = *r.t_hat;
        }
    }
    for (std::size_t t = 0; t < taus.size(); ++t) {
        EXPECT_EQ(map[t].back().t_hat, 1);
    }
    EXPECT_THROW(min_fraction_map({}, alphas, in), std::invalid_argument);
}

TEST(MinFractionMap, HigherSnrRegimeNeedsFewIndices)
{
    // L=5, sigma2=0.5, k=5, c_r=0.1 (about -3 dB): almost every (tau_d, alpha)
    // cell is met with one or two indices.
    const auto in = base_inputs(5, 5, 0.1, 0.5, {3.0, 4.0});
    std::vector<double> taus;
    std::vector<double> alphas;
    for (int i = 1; i <= 19; ++i) taus.push_back(0.05 * i);
    for (int i = 1; i <= 10; ++i) alphas.push_back(0.01 * i);
    const auto map = min_fraction_map(taus, alphas, in);
    int cells = 0;
    int small = 0;
    for (const auto& row : map) {
        for (const auto& r : row) {
            ++cells;
            small += r.t_hat && *r.t_hat <= 2;
        }
    }
    EXPECT_GE(static_cast<double>(small) / cells, 0.8);
}

TEST(PlannerConsistency, KnownSupportDetectorMeetsTarget)
{
    // Equal-magnitude coefficients: running the known-support detector with the
    // planned number of true indices reaches Pd >= tau_d - 0.05.
    ExperimentConfig c;
    c.scenario.N = 128;
    c.scenario.k = 5;
    c.scenario.L = 5;
    c.scenario.range = {3.5, 3.5};
    c.scenario.sigma2 = 1.0;
    c.T0 = 1;
    c.trials = 10000;
    c.seed = 77;
    c = c.with_compression(0.1);
    int checked = 0;
    for (const double tau_d : {0.7, 0.85}) {
        const auto plan = solve_min_fraction(theory_inputs(c, 0.05, tau_d));
        if (plan.status != PlannerStatus::Interior) continue;
        ++checked;
        const double pd = empirical_known_support_pd(c, *plan.t_hat, 0.05);
        EXPECT_GE(pd, tau_d - 0.05) << "tau_d=" << tau_d << " t_hat=" << *plan.t_hat;
    }
    EXPECT_GT(checked, 0);
}
