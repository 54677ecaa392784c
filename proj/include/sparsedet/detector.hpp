#pragma once

#include <span>
#include <vector>

#include "sparsedet/model.hpp"
#include "sparsedet/specfun.hpp"

namespace sparsedet {

/// Orthogonal projector onto the span of a set of basis columns.
///
/// The span is represented by an orthonormal factor obtained from a
/// column-pivoted QR of the columns; directions whose pivot falls below
/// rel_tol times the largest pivot are dropped, so rank-deficient column
/// sets behave like a pseudo-inverse projector.
class SubspaceProjector {
public:
    static constexpr double kDefaultRankTolerance = 1e-10;

    /// Projector onto the zero subspace of R^m.
    explicit SubspaceProjector(Eigen::Index m = 0);
    explicit SubspaceProjector(const Matrix& basis_columns, double rel_tol = kDefaultRankTolerance);

    static SubspaceProjector from_support(const Matrix& B, const SupportSet& support,
                                          double rel_tol = kDefaultRankTolerance);

    Vector apply(const Vector& y) const;
    Vector apply_complement(const Vector& y) const { return y - apply(y); }
    /// ||P y||^2 without forming P y.
    double captured_energy(const Vector& y) const;

    Eigen::Index ambient_dim() const noexcept { return factor_.rows(); }
    Eigen::Index requested_dim() const noexcept { return requested_dim_; }
    Eigen::Index effective_dim() const noexcept { return factor_.cols(); }
    bool rank_deficient() const noexcept { return effective_dim() < requested_dim_; }

private:
    Matrix factor_;  // ambient_dim x effective_dim, orthonormal columns
    Eigen::Index requested_dim_ = 0;
};

/// Per-node projected energies ||P_j y_j||^2.
std::vector<double> node_statistics(std::span<const SubspaceProjector> projectors, const ObservationSet& observations);

/// Lambda = sum_j ||P_j y_j||^2.
double statistic(std::span<const SubspaceProjector> projectors, const ObservationSet& observations);

/// One projector per node onto the columns of B_j listed in support.
std::vector<SubspaceProjector> projectors_for_support(const SensingEnsemble& sensing, const SupportSet& support);

/// Parameters of the closed-form performance model.
struct TheoryInputs {
    int t = 1;  // known support size T0
    int k = 2;
    int L = 1;
    int M = 1;
    int N = 2;
    double sigma2 = 1.0;
    std::vector<double> gamma;  // per-node uncompressed SNR ||s_j||^2 / sigma^2
    double alpha = 0.05;
    double tau_d = 0.9;

    double gamma_sum() const;
    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;
};

/// sum_j ||P_j B_j s_j||^2 / sigma^2 with P_j onto B_j(support_subset).
double noncentrality_exact(const SignalEnsemble& signals, const SensingEnsemble& sensing,
                           const SupportSet& support_subset, double sigma2);

/// Equal-magnitude approximation lambda_t = (M t / (N k)) (1 + (k - t) / M) sum_j gamma_j,
/// for real t.
double noncentrality_approx(double t, const TheoryInputs& inputs);
inline double noncentrality_approx(const TheoryInputs& inputs) { return noncentrality_approx(inputs.t, inputs); }

/// P_f = 1 - F(T0 L / 2, tau0 / (2 sigma^2)).
specfun::TailProb pf_theoretical(double tau0, int T0, int L, double sigma2);

/// P_d = Q_{T0 L / 2}(sqrt(lambda), sqrt(tau0 / sigma^2)).
specfun::TailProb pd_theoretical(double tau0, double lambda, int T0, int L, double sigma2);

/// Threshold with pf_theoretical(threshold) = alpha, found by bracketed bisection.
double threshold_exact(double alpha, int T0, int L, double sigma2);

/// tau0 ~ sigma^2 t L ((1 - 2/(9tL)) + sqrt(2/(9tL)) Q^{-1}(alpha))^3, for real t.
double threshold_sankaran(double alpha, double t, int L, double sigma2);

}  // namespace sparsedet
