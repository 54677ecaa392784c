#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "sparsedet/omp.hpp"
#include "sparsedet/oracles.hpp"

using namespace sparsedet;

namespace {

struct Instance {
    SignalEnsemble signals;
    SensingEnsemble sensing;
    ObservationSet observations;
};

Instance make_instance(int N, int k, int L, int M, double sigma2, Hypothesis h, std::uint64_t seed)
{
    Rng rng(seed);
    Instance inst;
    const auto support = draw_support(N, k, rng);
    inst.signals = draw_signals(support, L, {3.0, 4.0}, rng);
    inst.sensing = draw_sensing(M, N, L, rng);
    inst.observations = observe(inst.signals, inst.sensing, h, sigma2, rng);
    return inst;
}

}  // namespace

TEST(OmpSelect, IdentityPicksLargestEntry)
{
    const Matrix B = Matrix::Identity(4, 4);
    const Vector y = (Vector(4) << 0.0, 5.0, 0.0, 1.0).finished();
    const auto one = omp_select(y, B, 1);
    EXPECT_EQ(one.selected.indices(), (std::vector<int>{1}));
    EXPECT_NEAR(one.residual_norms.back(), 1.0, 1e-14);
    const auto two = omp_select(y, B, 2);
    EXPECT_EQ(two.selected.indices(), (std::vector<int>{1, 3}));
    EXPECT_NEAR(two.residual_norms.back(), 0.0, 1e-14);
    EXPECT_EQ(two.iterations, 2);
    EXPECT_NEAR(two.residual_norms.front(), std::sqrt(26.0), 1e-14);
}

TEST(OmpSelect, TiesGoToLowerIndex)
{
    const Matrix B = Matrix::Identity(3, 3);
    const Vector y = (Vector(3) << 0.0, 2.0, -2.0).finished();
    EXPECT_EQ(omp_select(y, B, 1).selected.indices(), (std::vector<int>{1}));
}

TEST(OmpSelect, MatchesReferenceOnRandomInstances)
{
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        Rng rng(seed);
        const Matrix B = draw_sensing(8, 16, 1, rng).operators[0];
        Vector y(8);
        for (int i = 0; i < 8; ++i) y(i) = rng.normal();
        const auto got = omp_select(y, B, 5);
        const auto ref = oracle::omp(y, B, 5);
        EXPECT_EQ(got.selected.indices(), ref.selected) << "seed " << seed;
        ASSERT_EQ(got.residual_norms.size(), ref.residual_norms.size());
        for (std::size_t i = 0; i < ref.residual_norms.size(); ++i) {
            EXPECT_NEAR(got.residual_norms[i], ref.residual_norms[i], 1e-10);
        }
    }
}

TEST(OmpSelect, ResidualsNonincreasingAndSelectionsDistinct)
{
    const auto inst = make_instance(64, 6, 1, 20, 1.0, Hypothesis::H1, 5);
    const auto trace = omp_select(inst.observations.measurements[0], inst.sensing.operators[0], 20);
    for (std::size_t i = 1; i < trace.residual_norms.size(); ++i) {
        EXPECT_LE(trace.residual_norms[i], trace.residual_norms[i - 1] + 1e-12);
    }
    EXPECT_NEAR(trace.residual_norms.back(), 0.0, 1e-9);
    EXPECT_EQ(trace.selected.size(), 20);
}

TEST(OmpSelect, IterationBounds)
{
    const Matrix B = Matrix::Identity(4, 4);
    const Vector y = Vector::Ones(4);
    EXPECT_THROW(omp_select(y, B, 0), std::invalid_argument);
    EXPECT_THROW(omp_select(y, B, 5), std::invalid_argument);
    EXPECT_THROW(omp_select(Vector::Ones(3), B, 1), std::invalid_argument);
}

TEST(OmpSelect, NoiselessSquareOrthonormalRecoversSupport)
{
    Rng rng(8);
    const int N = 32;
    const auto support = draw_support(N, 4, rng);
    const auto signals = draw_signals(support, 1, {3.0, 4.0}, rng);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(Matrix::NullaryExpr(N, N, [&] { return rng.normal(); }))
                         .householderQ();
    const Vector y = Q * signals.coefficients[0];
    EXPECT_EQ(omp_select(y, Q, 4).selected.sorted().indices(), support.indices());
}

TEST(Somp, SingleNodeEqualsOmp)
{
    const auto inst = make_instance(64, 5, 1, 16, 1.0, Hypothesis::H1, 12);
    const auto out = somp_detect(inst.observations, inst.sensing, 3, 0.0);
    const auto trace = omp_select(inst.observations.measurements[0], inst.sensing.operators[0], 3);
    ASSERT_EQ(out.supports.size(), 1u);
    EXPECT_EQ(out.supports[0].indices(), trace.selected.indices());
    const double r0 = trace.residual_norms.front();
    const double r3 = trace.residual_norms.back();
    EXPECT_NEAR(out.statistic, r0 * r0 - r3 * r3, 1e-9);
    EXPECT_EQ(out.messages_per_node, 16);
}

TEST(Somp, DecisionFollowsThreshold)
{
    const auto inst = make_instance(64, 5, 3, 16, 1.0, Hypothesis::H1, 13);
    const auto probe = somp_detect(inst.observations, inst.sensing, 2, 0.0);
    EXPECT_EQ(somp_detect(inst.observations, inst.sensing, 2, probe.statistic).decision, Hypothesis::H1);
    EXPECT_EQ(somp_detect(inst.observations, inst.sensing, 2, probe.statistic * 1.0001).decision, Hypothesis::H0);
}

TEST(Somp, NoiselessRecoveryWithSeveralNodes)
{
    const auto inst = make_instance(128, 4, 5, 40, 1e-12, Hypothesis::H1, 21);
    const auto out = somp_detect(inst.observations, inst.sensing, 4, 0.0);
    EXPECT_EQ(out.supports[0].sorted().indices(), inst.signals.true_support.indices());
}

TEST(Dist1, StatisticIsSumOfLocalEnergies)
{
    const auto inst = make_instance(64, 5, 4, 16, 1.0, Hypothesis::H1, 33);
    const auto out = dist1_detect(inst.observations, inst.sensing, 2, 0.0);
    ASSERT_EQ(out.per_node.size(), 4u);
    ASSERT_EQ(out.supports.size(), 4u);
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
        const auto trace = omp_select(inst.observations.measurements[j], inst.sensing.operators[j], 2);
        EXPECT_EQ(out.supports[j].indices(), trace.selected.indices());
        const double local = std::pow(trace.residual_norms.front(), 2) - std::pow(trace.residual_norms.back(), 2);
        EXPECT_NEAR(out.per_node[j], local, 1e-9);
        EXPECT_GE(out.per_node[j], -1e-12);
        EXPECT_LE(out.per_node[j], inst.observations.measurements[j].squaredNorm() + 1e-9);
        sum += out.per_node[j];
    }
    EXPECT_NEAR(out.statistic, sum, 1e-9);
    EXPECT_EQ(out.messages_per_node, 1);
}

TEST(Dist1, SingleNodeMatchesCentralized)
{
    const auto inst = make_instance(64, 5, 1, 16, 1.0, Hypothesis::H0, 34);
    EXPECT_NEAR(dist1_detect(inst.observations, inst.sensing, 3, 0.0).statistic,
                somp_detect(inst.observations, inst.sensing, 3, 0.0).statistic, 1e-12);
}

TEST(Fuse, FrequencyThenPositionThenIndex)
{
    const std::vector<SupportSet> locals{SupportSet({1, 5}, 10), SupportSet({5, 7}, 10), SupportSet({5, 1}, 10)};
    EXPECT_EQ(fuse_supports(locals, 3).indices(), (std::vector<int>{5, 1, 7}));
    EXPECT_EQ(fuse_supports(locals, 2).indices(), (std::vector<int>{5, 1}));
}

TEST(Fuse, ConsensusIsKept)
{
    const std::vector<SupportSet> locals(4, SupportSet({3, 8, 2}, 10));
    EXPECT_EQ(fuse_supports(locals, 3).sorted().indices(), (std::vector<int>{2, 3, 8}));
}

TEST(Fuse, ShortUnionIsNotPadded)
{
    const std::vector<SupportSet> locals{SupportSet({4}, 10), SupportSet({4}, 10)};
    EXPECT_EQ(fuse_supports(locals, 3).indices(), (std::vector<int>{4}));
}

TEST(Fuse, Preconditions)
{
    EXPECT_THROW(fuse_supports({}, 2), std::invalid_argument);
    const std::vector<SupportSet> locals{SupportSet({1}, 10)};
    EXPECT_THROW(fuse_supports(locals, 0), std::invalid_argument);
}

TEST(Fuse, MatchesBruteForceTally)
{
    Rng rng(55);
    for (int round = 0; round < 300; ++round) {
        const int L = 1 + static_cast<int>(rng.below(6));
        const int T0 = 1 + static_cast<int>(rng.below(4));
        const int k = T0 + static_cast<int>(rng.below(4));
        std::vector<SupportSet> locals;
        std::vector<std::vector<int>> raw;
        for (int j = 0; j < L; ++j) {
            // Small universe so that frequency ties are common.
            auto s = draw_support(8, T0, rng).indices();
            for (std::size_t i = s.size(); i > 1; --i) {
                std::swap(s[i - 1], s[rng.below(i)]);
            }
            raw.push_back(s);
            locals.emplace_back(s, 8);
        }
        EXPECT_EQ(fuse_supports(locals, k).indices(), oracle::fuse_by_tally(raw, 8, k)) << "round " << round;
    }
}

TEST(Dist2, SingleNodeCoincidesWithCentralized)
{
    const auto inst = make_instance(64, 5, 1, 16, 1.0, Hypothesis::H1, 61);
    const auto d2 = dist2_detect(inst.observations, inst.sensing, 3, 3, 0.0);
    const auto c = somp_detect(inst.observations, inst.sensing, 3, 0.0);
    EXPECT_NEAR(d2.statistic, c.statistic, 1e-12 * std::max(1.0, c.statistic));
}

TEST(Dist2, UsesFusedSupportAtEveryNode)
{
    const auto inst = make_instance(64, 5, 4, 16, 1.0, Hypothesis::H1, 62);
    const auto out = dist2_detect(inst.observations, inst.sensing, 2, 5, 0.0);
    ASSERT_TRUE(out.fused_support.has_value());
    EXPECT_LE(out.fused_support->size(), 5);
    const auto expected = fuse_supports(out.supports, 5);
    EXPECT_EQ(out.fused_support->indices(), expected.indices());
    const auto projectors = projectors_for_support(inst.sensing, *out.fused_support);
    EXPECT_NEAR(out.statistic, statistic(projectors, inst.observations), 1e-9);
    EXPECT_EQ(out.messages_per_node, 3);
}

TEST(Dist2, Preconditions)
{
    const auto inst = make_instance(64, 5, 2, 16, 1.0, Hypothesis::H1, 63);
    EXPECT_THROW(dist2_detect(inst.observations, inst.sensing, 3, 2, 0.0), std::invalid_argument);
}

TEST(KnownSupport, EnergyOnSubset)
{
    const auto inst = make_instance(64, 5, 3, 16, 1.0, Hypothesis::H1, 71);
    const SupportSet subset({inst.signals.true_support.indices()[0], inst.signals.true_support.indices()[2]}, 64);
    const auto out = known_support_detect(inst.observations, inst.sensing, subset, 0.0);
    EXPECT_NEAR(out.statistic, statistic(projectors_for_support(inst.sensing, subset), inst.observations), 1e-12);
}

TEST(Ml, EqualsTotalEnergy)
{
    const auto inst = make_instance(64, 5, 3, 16, 1.0, Hypothesis::H1, 81);
    double total = 0.0;
    for (const auto& y : inst.observations.measurements) total += y.squaredNorm();
    EXPECT_NEAR(ml_detect(inst.observations, inst.sensing, 0.0).statistic, total, 1e-10 * total);
}

TEST(Messages, Table)
{
    EXPECT_EQ(messages_per_node(Algorithm::Somp, 26, 2), 26);
    EXPECT_EQ(messages_per_node(Algorithm::Dist1, 26, 2), 1);
    EXPECT_EQ(messages_per_node(Algorithm::Dist2, 26, 2), 3);
    EXPECT_EQ(messages_per_node(Algorithm::MlIgnoreSparsity, 26, 2), 26);
}

TEST(AlgorithmNames, RoundTrip)
{
    for (const auto a : {Algorithm::KnownSupport, Algorithm::Somp, Algorithm::Dist1, Algorithm::Dist2,
                         Algorithm::MlIgnoreSparsity}) {
        EXPECT_EQ(algorithm_from_string(to_string(a)), a);
    }
    EXPECT_THROW(algorithm_from_string("bogus"), std::invalid_argument);
}

TEST(P1P2, ConsistencyOfEstimates)
{
    Scenario s;
    s.N = 128;
    s.k = 5;
    s.L = 3;
    s.M = 13;
    s.sigma2 = 2.0;
    s.range = {3.0, 4.0};
    const int trials = 4000;
    const auto est = estimate_p1_p2(s, trials, 2024);
    EXPECT_EQ(est.trials, trials);
    EXPECT_EQ(est.rho_mismatches, 0);
    ASSERT_EQ(est.per_node_success.size(), 3u);
    for (const double p : est.per_node_success) {
        EXPECT_GE(est.p2, p);
    }
    // Under independence across nodes the union probability has product form.
    const double se = std::sqrt(est.p2 * (1.0 - est.p2) / trials);
    EXPECT_NEAR(est.p2, est.p2_product_form, 4.0 * se + 0.01);
    const auto again = estimate_p1_p2(s, trials, 2024);
    EXPECT_EQ(again.p1, est.p1);
    EXPECT_EQ(again.p2, est.p2);
}

TEST(P1P2, LargeCompressionBothApproachOne)
{
    Scenario s;
    s.N = 64;
    s.k = 4;
    s.L = 2;
    s.M = 48;
    s.sigma2 = 0.05;
    s.range = {3.0, 4.0};
    const auto est = estimate_p1_p2(s, 500, 9);
    EXPECT_GE(est.p1, 0.99);
    EXPECT_GE(est.p2, 0.99);
}
