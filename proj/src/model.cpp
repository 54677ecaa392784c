#include "sparsedet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sparsedet {

SupportSet::SupportSet(std::vector<int> indices, int ambient_dim)
    : ambient_dim_(ambient_dim)
{
    if (ambient_dim < 0) {
        throw std::invalid_argument("SupportSet: negative ambient dimension");
    }
    indices_.reserve(indices.size());
    for (const int index : indices) {
        push_back(index);
    }
}

bool SupportSet::contains(int index) const
{
    return std::find(indices_.begin(), indices_.end(), index) != indices_.end();
}

void SupportSet::push_back(int index)
{
    if (index < 0 || index >= ambient_dim_) {
        throw std::invalid_argument("SupportSet: index " + std::to_string(index) + " outside [0, " +
                                    std::to_string(ambient_dim_) + ")");
    }
    if (contains(index)) {
        throw std::invalid_argument("SupportSet: duplicate index " + std::to_string(index));
    }
    indices_.push_back(index);
}

SupportSet SupportSet::sorted() const
{
    SupportSet out = *this;
    std::sort(out.indices_.begin(), out.indices_.end());
    return out;
}

double CoefficientRange::mean_square() const
{
    if (hi == lo) {
        return lo * lo;
    }
    return (hi * hi * hi - lo * lo * lo) / (3.0 * (hi - lo));
}

SupportSet draw_support(int N, int k, Rng& rng)
{
    if (k < 1 || k >= N) {
        throw std::invalid_argument("draw_support: need 1 <= k < N");
    }
    std::vector<int> pool(static_cast<std::size_t>(N));
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(N - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return SupportSet(std::move(pool), N);
}

SignalEnsemble draw_signals(const SupportSet& support, int L, CoefficientRange range, Rng& rng)
{
    if (!(range.lo > 0.0) || range.hi < range.lo) {
        throw std::invalid_argument("draw_signals: need 0 < a <= b");
    }
    if (L < 1) {
        throw std::invalid_argument("draw_signals: need at least one node");
    }
    SignalEnsemble out;
    out.true_support = support;
    out.range = range;
    out.coefficients.reserve(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) {
        Vector s = Vector::Zero(support.ambient_dim());
        for (const int index : support.indices()) {
            const double magnitude = range.hi == range.lo ? range.lo : rng.uniform(range.lo, range.hi);
            s(index) = rng.coin() ? magnitude : -magnitude;
        }
        out.coefficients.push_back(std::move(s));
    }
    return out;
}

SensingEnsemble draw_sensing(int M, int N, int L, Rng& rng)
{
    if (M < 1 || M >= N) {
        throw std::invalid_argument("draw_sensing: need 1 <= M < N");
    }
    if (L < 1) {
        throw std::invalid_argument("draw_sensing: need at least one node");
    }
    SensingEnsemble out;
    out.operators.reserve(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) {
        // Orthonormalize the rows of a Gaussian draw through a QR of its
        // transpose; the sign fix makes the row frame Haar-distributed.
        Matrix gaussian(N, M);
        for (Eigen::Index c = 0; c < M; ++c) {
            for (Eigen::Index r = 0; r < N; ++r) {
                gaussian(r, c) = rng.normal();
            }
        }
        Eigen::HouseholderQR<Matrix> qr(gaussian);
        Matrix q = qr.householderQ() * Matrix::Identity(N, M);
        const Matrix& packed = qr.matrixQR();
        for (Eigen::Index c = 0; c < M; ++c) {
            if (packed(c, c) < 0.0) {
                q.col(c) = -q.col(c);
            }
        }
        out.operators.push_back(q.transpose());
    }
    return out;
}

SensingEnsemble with_basis(const SensingEnsemble& sensing, const Matrix& psi)
{
    const auto n = sensing.cols();
    if (psi.rows() != n || psi.cols() != n) {
        throw std::invalid_argument("with_basis: basis must be N x N");
    }
    if ((psi.transpose() * psi - Matrix::Identity(n, n)).norm() > 1e-9) {
        throw std::invalid_argument("with_basis: basis must be orthonormal");
    }
    SensingEnsemble out;
    out.operators.reserve(sensing.operators.size());
    for (const auto& a : sensing.operators) {
        out.operators.push_back(a * psi);
    }
    return out;
}

namespace {

void check_dimensions(const SignalEnsemble& signals, const SensingEnsemble& sensing)
{
    if (signals.nodes() != sensing.nodes()) {
        throw std::invalid_argument("observe: signal and sensing node counts differ");
    }
    for (int j = 0; j < sensing.nodes(); ++j) {
        if (sensing.operators[j].cols() != signals.coefficients[j].size()) {
            throw std::invalid_argument("observe: operator width does not match signal length");
        }
    }
}

Vector gaussian_vector(Eigen::Index n, double variance, Rng& rng)
{
    const double sd = std::sqrt(variance);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = sd * rng.normal();
    }
    return v;
}

}  // namespace

ObservationSet observe(const SignalEnsemble& signals, const SensingEnsemble& sensing, Hypothesis hypothesis,
                       double noise_variance, Rng& rng)
{
    if (!(noise_variance > 0.0)) {
        throw std::invalid_argument("observe: noise variance must be positive");
    }
    check_dimensions(signals, sensing);
    ObservationSet out;
    out.hypothesis = hypothesis;
    out.noise_variance = noise_variance;
    out.measurements.reserve(static_cast<std::size_t>(sensing.nodes()));
    for (int j = 0; j < sensing.nodes(); ++j) {
        const Matrix& B = sensing.operators[j];
        Vector y = gaussian_vector(B.rows(), noise_variance, rng);
        if (hypothesis == Hypothesis::H1) {
            y += B * signals.coefficients[j];
        }
        out.measurements.push_back(std::move(y));
    }
    return out;
}

ObservationSet observe_two_stage(const SignalEnsemble& signals, const SensingEnsemble& sensing,
                                 Hypothesis hypothesis, double signal_noise_variance,
                                 double measurement_noise_variance, Rng& rng)
{
    if (!(signal_noise_variance > 0.0) || measurement_noise_variance < 0.0) {
        throw std::invalid_argument("observe_two_stage: invalid noise variances");
    }
    check_dimensions(signals, sensing);
    ObservationSet out;
    out.hypothesis = hypothesis;
    out.noise_variance = signal_noise_variance + measurement_noise_variance;
    for (int j = 0; j < sensing.nodes(); ++j) {
        const Matrix& B = sensing.operators[j];
        Vector x = gaussian_vector(B.cols(), signal_noise_variance, rng);
        if (hypothesis == Hypothesis::H1) {
            x += signals.coefficients[j];
        }
        Vector y = B * x;
        if (measurement_noise_variance > 0.0) {
            y += gaussian_vector(B.rows(), measurement_noise_variance, rng);
        }
        out.measurements.push_back(std::move(y));
    }
    return out;
}

SnrSummary snr_summary(const SignalEnsemble& signals, double noise_variance)
{
    if (!(noise_variance > 0.0)) {
        throw std::invalid_argument("snr_summary: noise variance must be positive");
    }
    SnrSummary out;
    double total = 0.0;
    for (const auto& s : signals.coefficients) {
        const double gamma = s.squaredNorm() / noise_variance;
        out.per_node.push_back(gamma);
        total += gamma;
    }
    const double L = static_cast<double>(signals.coefficients.size());
    const double N = static_cast<double>(signals.ambient_dim());
    out.average = (L > 0 && N > 0) ? total / (L * N) : 0.0;
    return out;
}

double noise_variance_for_snr_db(double snr_db, int k, int N, CoefficientRange range)
{
    const double snr = std::pow(10.0, snr_db / 10.0);
    return k * range.mean_square() / (N * snr);
}

Matrix select_columns(const Matrix& B, const SupportSet& support)
{
    Matrix out(B.rows(), support.size());
    for (int c = 0; c < support.size(); ++c) {
        out.col(c) = B.col(support.indices()[static_cast<std::size_t>(c)]);
    }
    return out;
}

}  // namespace sparsedet
