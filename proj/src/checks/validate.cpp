#include "sparsedet/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "sparsedet/oracles.hpp"

namespace sparsedet {

namespace {

std::string fmt(const char* format, double a, double b = 0.0)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, format, a, b);
    return buf;
}

CheckResult guarded(const std::string& name, const std::function<CheckResult()>& body)
{
    try {
        CheckResult r = body();
        r.name = name;
        return r;
    }
    catch (const std::exception& e) {
        return {name, false, std::string("threw: ") + e.what()};
    }
}

CheckResult within(double worst, double tol, const char* what)
{
    return {"", worst <= tol, fmt(what, worst, tol)};
}

CheckResult gaussian_tail()
{
    double worst = 0.0;
    for (double x = -8.0; x <= 8.0; x += 0.25) {
        worst = std::max(worst, std::abs(specfun::gaussian_q(x).value() - oracle::gaussian_q(x)));
    }
    return within(worst, 1e-10, "max |Q - quadrature| = %.3g (tol %.0e)");
}

CheckResult gaussian_inverse()
{
    double worst = 0.0;
    for (double x = -8.0; x <= 8.0; x += 0.125) {
        worst = std::max(worst, std::abs(specfun::gaussian_q_inv(specfun::gaussian_q(x)) - x));
    }
    return within(worst, 1e-10, "max |Qinv(Q(x)) - x| on [-8, 8] = %.3g (tol %.0e)");
}

CheckResult incomplete_gamma()
{
    double worst = 0.0;
    for (const double a : {0.5, 1.0, 2.5, 5.0, 12.5, 40.0}) {
        for (const double x : {0.1, 1.0, 2.0, 4.3, 10.0, 30.0, 60.0}) {
            worst = std::max(worst, std::abs(specfun::reg_lower_gamma(a, x).value() - oracle::reg_lower_gamma(a, x)));
        }
    }
    return within(worst, 1e-10, "max |P(a,x) - quadrature| = %.3g (tol %.0e)");
}

CheckResult marcum()
{
    double worst = 0.0;
    for (const double order : {1.0, 1.5, 2.5, 5.0}) {
        for (const double a : {0.0, 0.5, 1.0, 3.0}) {
            for (const double b : {0.5, 2.0, 4.0}) {
                worst = std::max(worst, std::abs(specfun::marcum_q(order, a, b).value() -
                                                 oracle::marcum_q(order, a, b)));
            }
        }
    }
    return within(worst, 1e-8, "max |Q_M(a,b) - integral| = %.3g (tol %.0e)");
}

CheckResult noncentral_series()
{
    double worst = 0.0;
    for (const double df : {1.0, 4.0, 10.0, 25.0}) {
        for (const double lambda : {0.5, 6.0, 40.0}) {
            for (const double x : {1.0, 12.0, 60.0}) {
                worst = std::max(worst, std::abs(specfun::ncchi2_cdf(df, lambda, x).value() -
                                                 oracle::ncchi2_cdf_series(df, lambda, x)));
            }
        }
    }
    return within(worst, 1e-10, "max |ncchi2 - Poisson series| = %.3g (tol %.0e)");
}

CheckResult marcum_complement()
{
    Rng rng(20231);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double df = 2.0 + static_cast<double>(rng.below(60));
        const double lambda = rng.uniform(0.0, 80.0);
        const double x = rng.uniform(0.0, 200.0);
        const double lhs = 1.0 - specfun::ncchi2_cdf(df, lambda, x).value();
        const double rhs = specfun::marcum_q(0.5 * df, std::sqrt(lambda), std::sqrt(x)).value();
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return within(worst, 1e-8, "max |1 - F - Q_M| = %.3g (tol %.0e)");
}

CheckResult projector_algebra()
{
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 6 + static_cast<int>(rng.below(20));
        const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 1)));
        Matrix basis(m, t);
        for (Eigen::Index i = 0; i < basis.size(); ++i) {
            basis.data()[i] = rng.normal();
        }
        Vector y(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            y(i) = rng.normal();
        }
        const SubspaceProjector P(basis);
        const Vector py = P.apply(y);
        worst = std::max(worst, (P.apply(py) - py).norm());
        worst = std::max(worst, std::abs(py.squaredNorm() + P.apply_complement(y).squaredNorm() - y.squaredNorm()) /
                                    y.squaredNorm());
        worst = std::max(worst, (basis.transpose() * P.apply_complement(y)).norm());
    }
    return within(worst, 1e-10, "max idempotency / Pythagoras / orthogonality error = %.3g (tol %.0e)");
}

CheckResult omp_residuals()
{
    int bad = 0;
    int sequence_mismatch = 0;
    for (int trial = 0; trial < 40; ++trial) {
        auto rng = Rng::stream(99, {static_cast<std::uint64_t>(trial)});
        const auto sensing = draw_sensing(12, 32, 1, rng);
        Vector y(12);
        for (Eigen::Index i = 0; i < 12; ++i) {
            y(i) = rng.normal();
        }
        const auto trace = omp_select(y, sensing.operators[0], 6);
        for (std::size_t i = 1; i < trace.residual_norms.size(); ++i) {
            bad += trace.residual_norms[i] > trace.residual_norms[i - 1] * (1.0 + 1e-12);
        }
        const auto ref = oracle::omp(y, sensing.operators[0], 6);
        sequence_mismatch += ref.selected != trace.selected.indices();
    }
    return {"", bad == 0 && sequence_mismatch == 0,
            fmt("residual increases: %.0f, sequences differing from reference OMP: %.0f", bad, sequence_mismatch)};
}

CheckResult single_node_coincidence()
{
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        auto rng = Rng::stream(5150, {static_cast<std::uint64_t>(trial)});
        const int k = 3;
        const auto support = draw_support(40, k, rng);
        const auto signals = draw_signals(support, 1, {1.0, 2.0}, rng);
        const auto sensing = draw_sensing(15, 40, 1, rng);
        const auto obs = observe(signals, sensing, Hypothesis::H1, 0.5, rng);
        const double c = somp_detect(obs, sensing, k, 0.0).statistic;
        const double d1 = dist1_detect(obs, sensing, k, 0.0).statistic;
        const double d2 = dist2_detect(obs, sensing, k, k, 0.0).statistic;
        worst = std::max({worst, std::abs(c - d1), std::abs(c - d2)});
    }
    return within(worst, 1e-12, "max |somp - dist1|, |somp - dist2| at L=1, T0=k: %.3g (tol %.0e)");
}

CheckResult fusion_tally()
{
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        auto rng = Rng::stream(31337, {static_cast<std::uint64_t>(trial)});
        const int N = 8 + static_cast<int>(rng.below(8));
        const int L = 1 + static_cast<int>(rng.below(6));
        const int T0 = 1 + static_cast<int>(rng.below(4));
        const int k = T0 + static_cast<int>(rng.below(4));
        std::vector<std::vector<int>> raw;
        std::vector<SupportSet> locals;
        for (int j = 0; j < L; ++j) {
            const auto drawn = draw_support(N, T0, rng);
            std::vector<int> order = drawn.indices();
            std::shuffle(order.begin(), order.end(), rng.engine());
            raw.push_back(order);
            locals.emplace_back(order, N);
        }
        mismatches += fuse_supports(locals, k).indices() != oracle::fuse_by_tally(raw, N, k);
    }
    return {"", mismatches == 0, fmt("fusion disagreements with brute-force tally: %.0f of %.0f", mismatches, 500)};
}

CheckResult message_table()
{
    bool ok = true;
    for (const int M : {10, 26, 51}) {
        for (const int T0 : {1, 2, 5}) {
            ok = ok && messages_per_node(Algorithm::Somp, M, T0) == M;
            ok = ok && messages_per_node(Algorithm::Dist1, M, T0) == 1;
            ok = ok && messages_per_node(Algorithm::Dist2, M, T0) == T0 + 1;
        }
    }
    return {"", ok, "somp = M, dist1 = 1, dist2 = T0 + 1"};
}

CheckResult sensing_rows()
{
    double worst = 0.0;
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sensing = draw_sensing(26, 256, 3, rng);
        for (const auto& B : sensing.operators) {
            worst = std::max(worst, (B * B.transpose() - Matrix::Identity(26, 26)).norm());
        }
    }
    return within(worst, 1e-10, "max ||B B^T - I||_F = %.3g (tol %.0e)");
}

CheckResult reproducible(const ExperimentConfig& base)
{
    ExperimentConfig a = base;
    a.threads = 1;
    ExperimentConfig b = base;
    b.threads = 2;
    const auto ra = run_roc(a);
    const auto rb = run_roc(b);
    const std::string csv_a = roc_csv(a, "roc", ra.curves);
    const std::string csv_b = roc_csv(b, "roc", rb.curves);
    const std::string csv_again = roc_csv(a, "roc", run_roc(a).curves);
    const bool same = csv_a == csv_b && csv_a == csv_again;
    int violations = 0;
    for (const auto& curve : ra.curves) {
        violations += curve.validity_violations;
    }
    return {"", same && violations == 0,
            same ? fmt("byte-identical across reruns and worker counts; validity violations %.0f", violations)
                 : std::string("CSV bytes differ between reruns")};
}

}  // namespace

ExperimentConfig validation_config()
{
    ExperimentConfig c;
    c.scenario.N = 64;
    c.scenario.k = 4;
    c.scenario.L = 3;
    c.c_r = 0.25;
    c.scenario.M = rows_for_compression(c.c_r, c.scenario.N);
    c.scenario.sigma2 = 1.0;
    c.T0 = 2;
    c.trials = 300;
    c.seed = 2024;
    c.threads = 1;
    return c;
}

std::vector<CheckResult> run_validation_suite(const ExperimentConfig& base)
{
    std::vector<CheckResult> out;
    out.push_back(guarded("gaussian_q vs quadrature", gaussian_tail));
    out.push_back(guarded("gaussian_q_inv round trip", gaussian_inverse));
    out.push_back(guarded("reg_lower_gamma vs quadrature", incomplete_gamma));
    out.push_back(guarded("marcum_q vs defining integral", marcum));
    out.push_back(guarded("ncchi2_cdf vs Poisson series", noncentral_series));
    out.push_back(guarded("marcum_q complement identity", marcum_complement));
    out.push_back(guarded("sensing rows orthonormal", sensing_rows));
    out.push_back(guarded("projector idempotency and Pythagoras", projector_algebra));
    out.push_back(guarded("OMP residual monotonicity and reference", omp_residuals));
    out.push_back(guarded("single-node algorithm coincidence", single_node_coincidence));
    out.push_back(guarded("fuse_supports vs brute-force tally", fusion_tally));
    out.push_back(guarded("message-count table", message_table));
    out.push_back(guarded("seed determinism", [&] { return reproducible(base); }));
    return out;
}

}  // namespace sparsedet
