#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "sparsedet/rng.hpp"

namespace sparsedet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Hypothesis { H0, H1 };

/// Ordered collection of distinct column indices into an ambient space of
/// dimension N. Indices are zero-based: every entry lies in [0, N).
class SupportSet {
public:
    SupportSet() = default;
    /// Throws std::invalid_argument on duplicates or out-of-range entries.
    SupportSet(std::vector<int> indices, int ambient_dim);

    const std::vector<int>& indices() const noexcept { return indices_; }
    int ambient_dim() const noexcept { return ambient_dim_; }
    int size() const noexcept { return static_cast<int>(indices_.size()); }
    bool empty() const noexcept { return indices_.empty(); }
    bool contains(int index) const;

    /// Appends an index; throws if it is already present or out of range.
    void push_back(int index);

    /// Same indices in ascending order.
    SupportSet sorted() const;

    friend bool operator==(const SupportSet&, const SupportSet&) = default;

private:
    std::vector<int> indices_;
    int ambient_dim_ = 0;
};

/// Closed magnitude interval [lo, hi] for nonzero coefficients.
struct CoefficientRange {
    double lo = 3.0;
    double hi = 4.0;

    /// E[c^2] for |c| uniform on [lo, hi].
    double mean_square() const;
};

/// L coefficient vectors that share one true support.
struct SignalEnsemble {
    std::vector<Vector> coefficients;
    SupportSet true_support;
    CoefficientRange range;

    int nodes() const noexcept { return static_cast<int>(coefficients.size()); }
    int ambient_dim() const noexcept { return true_support.ambient_dim(); }
};

/// L row-orthonormal M x N operators B_j = A_j Psi.
struct SensingEnsemble {
    std::vector<Matrix> operators;

    int nodes() const noexcept { return static_cast<int>(operators.size()); }
    int rows() const noexcept { return operators.empty() ? 0 : static_cast<int>(operators.front().rows()); }
    int cols() const noexcept { return operators.empty() ? 0 : static_cast<int>(operators.front().cols()); }
};

struct ObservationSet {
    std::vector<Vector> measurements;
    Hypothesis hypothesis = Hypothesis::H0;
    double noise_variance = 1.0;

    int nodes() const noexcept { return static_cast<int>(measurements.size()); }
};

/// Shape of a simulated network.
struct Scenario {
    int N = 256;
    int k = 5;
    int L = 5;
    int M = 26;
    double sigma2 = 1.0;
    CoefficientRange range;

    double compression_ratio() const { return static_cast<double>(M) / N; }
};

/// k distinct indices drawn uniformly from [0, N), returned in ascending order.
SupportSet draw_support(int N, int k, Rng& rng);

/// Magnitudes uniform on [a, b], signs equiprobable, i.i.d. over nodes and positions.
SignalEnsemble draw_signals(const SupportSet& support, int L, CoefficientRange range, Rng& rng);

/// Gaussian M x N draws with orthonormalized rows (Haar-distributed row frames).
SensingEnsemble draw_sensing(int M, int N, int L, Rng& rng);

/// Replaces every B_j with B_j * psi for an orthonormal N x N basis psi.
SensingEnsemble with_basis(const SensingEnsemble& sensing, const Matrix& psi);

/// Compressed observations y_j = B_j s_j + v_j (H1) or y_j = v_j (H0) with
/// v_j ~ N(0, noise_variance I_M), independent across nodes.
ObservationSet observe(const SignalEnsemble& signals, const SensingEnsemble& sensing, Hypothesis hypothesis,
                       double noise_variance, Rng& rng);

/// Two-stage noise: y_j = A_j (x_j + v_j) + n_j with uncompressed noise
/// variance signal_noise_variance and measurement noise variance
/// measurement_noise_variance. Distributionally equal to observe() with the
/// summed variance when the rows are orthonormal.
ObservationSet observe_two_stage(const SignalEnsemble& signals, const SensingEnsemble& sensing,
                                 Hypothesis hypothesis, double signal_noise_variance,
                                 double measurement_noise_variance, Rng& rng);

struct SnrSummary {
    std::vector<double> per_node;  // gamma_j = ||s_j||^2 / sigma^2
    double average = 0.0;          // sum_j gamma_j / (L N)
};

SnrSummary snr_summary(const SignalEnsemble& signals, double noise_variance);

/// Noise variance that gives an average uncompressed SNR of snr_db for k
/// coefficients whose magnitudes are uniform on the range.
double noise_variance_for_snr_db(double snr_db, int k, int N, CoefficientRange range);

/// Sub-matrix of B with the columns listed in support, in support order.
Matrix select_columns(const Matrix& B, const SupportSet& support);

}  // namespace sparsedet
