#include "sparsedet/detector.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparsedet {

SubspaceProjector::SubspaceProjector(Eigen::Index m)
    : factor_(m, 0)
{
}

SubspaceProjector::SubspaceProjector(const Matrix& basis_columns, double rel_tol)
    : requested_dim_(basis_columns.cols())
{
    const Eigen::Index m = basis_columns.rows();
    if (basis_columns.cols() == 0) {
        factor_.resize(m, 0);
        return;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(basis_columns);
    qr.setThreshold(rel_tol);
    const Eigen::Index rank = qr.rank();
    factor_ = qr.householderQ() * Matrix::Identity(m, rank);
}

SubspaceProjector SubspaceProjector::from_support(const Matrix& B, const SupportSet& support, double rel_tol)
{
    if (support.ambient_dim() != B.cols()) {
        throw std::invalid_argument("SubspaceProjector: support ambient dimension does not match operator");
    }
    if (support.empty()) {
        return SubspaceProjector(B.rows());
    }
    return SubspaceProjector(select_columns(B, support), rel_tol);
}

Vector SubspaceProjector::apply(const Vector& y) const
{
    if (y.size() != factor_.rows()) {
        throw std::invalid_argument("SubspaceProjector: vector length mismatch");
    }
    if (factor_.cols() == 0) {
        return Vector::Zero(y.size());
    }
    return factor_ * (factor_.transpose() * y);
}

double SubspaceProjector::captured_energy(const Vector& y) const
{
    if (y.size() != factor_.rows()) {
        throw std::invalid_argument("SubspaceProjector: vector length mismatch");
    }
    if (factor_.cols() == 0) {
        return 0.0;
    }
    return (factor_.transpose() * y).squaredNorm();
}

std::vector<double> node_statistics(std::span<const SubspaceProjector> projectors, const ObservationSet& observations)
{
    if (projectors.size() != observations.measurements.size()) {
        throw std::invalid_argument("statistic: need exactly one projector per node");
    }
    std::vector<double> out;
    out.reserve(projectors.size());
    for (std::size_t j = 0; j < projectors.size(); ++j) {
        out.push_back(projectors[j].captured_energy(observations.measurements[j]));
    }
    return out;
}

double statistic(std::span<const SubspaceProjector> projectors, const ObservationSet& observations)
{
    const auto per_node = node_statistics(projectors, observations);
    return std::accumulate(per_node.begin(), per_node.end(), 0.0);
}

std::vector<SubspaceProjector> projectors_for_support(const SensingEnsemble& sensing, const SupportSet& support)
{
    std::vector<SubspaceProjector> out;
    out.reserve(sensing.operators.size());
    for (const auto& B : sensing.operators) {
        out.push_back(SubspaceProjector::from_support(B, support));
    }
    return out;
}

double TheoryInputs::gamma_sum() const
{
    return std::accumulate(gamma.begin(), gamma.end(), 0.0);
}

void TheoryInputs::validate() const
{
    auto fail = [](const char* what) { throw std::invalid_argument(std::string("TheoryInputs: ") + what); };
    if (t < 1 || t > k) fail("need 1 <= t <= k");
    if (k >= N) fail("need k < N");
    if (M < 1 || M >= N) fail("need 1 <= M < N");
    if (L < 1) fail("need L >= 1");
    if (static_cast<int>(gamma.size()) != L) fail("need one SNR per node");
    if (!(sigma2 > 0.0)) fail("need sigma2 > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) fail("need alpha in (0, 1)");
    if (!(tau_d > 0.0 && tau_d < 1.0)) fail("need tau_d in (0, 1)");
}

double noncentrality_exact(const SignalEnsemble& signals, const SensingEnsemble& sensing,
                           const SupportSet& support_subset, double sigma2)
{
    if (!(sigma2 > 0.0)) {
        throw std::invalid_argument("noncentrality_exact: sigma2 must be positive");
    }
    if (signals.nodes() != sensing.nodes()) {
        throw std::invalid_argument("noncentrality_exact: node count mismatch");
    }
    double total = 0.0;
    for (int j = 0; j < sensing.nodes(); ++j) {
        const Matrix& B = sensing.operators[j];
        const auto projector = SubspaceProjector::from_support(B, support_subset);
        total += projector.captured_energy(B * signals.coefficients[j]);
    }
    return total / sigma2;
}

double noncentrality_approx(double t, const TheoryInputs& inputs)
{
    const double M = inputs.M;
    const double N = inputs.N;
    const double k = inputs.k;
    return (M * t / (N * k)) * (1.0 + (k - t) / M) * inputs.gamma_sum();
}

specfun::TailProb pf_theoretical(double tau0, int T0, int L, double sigma2)
{
    if (tau0 < 0.0) {
        throw std::invalid_argument("pf_theoretical: threshold must be non-negative");
    }
    return specfun::reg_upper_gamma(0.5 * T0 * L, tau0 / (2.0 * sigma2));
}

specfun::TailProb pd_theoretical(double tau0, double lambda, int T0, int L, double sigma2)
{
    if (tau0 < 0.0 || lambda < 0.0) {
        throw std::invalid_argument("pd_theoretical: threshold and noncentrality must be non-negative");
    }
    return specfun::marcum_q(0.5 * T0 * L, std::sqrt(lambda), std::sqrt(tau0 / sigma2));
}

double threshold_exact(double alpha, int T0, int L, double sigma2)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("threshold_exact: alpha must lie in (0, 1)");
    }
    const double a = 0.5 * T0 * L;
    // Bisection on u = tau0 / (2 sigma^2), where Q(a, u) is decreasing.
    double lo = 0.0;
    double hi = std::max(1.0, a);
    while (specfun::reg_upper_gamma(a, hi).value() > alpha) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (specfun::reg_upper_gamma(a, mid).value() > alpha) {
            lo = mid;
        }
        else {
            hi = mid;
        }
    }
    return 2.0 * sigma2 * 0.5 * (lo + hi);
}

double threshold_sankaran(double alpha, double t, int L, double sigma2)
{
    const double tl = t * L;
    if (!(tl >= 1.0)) {
        throw std::invalid_argument("threshold_sankaran: need t L >= 1");
    }
    const double v = 2.0 / (9.0 * tl);
    const double base = (1.0 - v) + std::sqrt(v) * specfun::gaussian_q_inv(alpha);
    return sigma2 * tl * base * base * base;
}

}  // namespace sparsedet
