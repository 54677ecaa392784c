#pragma once

#include <span>
#include <vector>

#include "sparsedet/model.hpp"

// Slow, independent reference implementations used by the property suite and
// the unit tests. None of them share code with the production paths.
namespace sparsedet::oracle {

/// Upper normal tail by quadrature of the density.
double gaussian_q(double x);

/// Regularized lower incomplete gamma by quadrature of t^(a-1) e^(-t).
double reg_lower_gamma(double a, double x);

/// Marcum Q by quadrature of x (x/a)^(M-1) exp(-(x^2 + a^2)/2) I_(M-1)(a x) over [b, inf).
double marcum_q(double order, double a, double b);

/// Noncentral chi-squared cdf as a Poisson-weighted sum of central cdfs,
/// stopped once the remaining Poisson mass is below tail.
double ncchi2_cdf_series(double df, double lambda, double x, double tail = 1e-13);

/// Cube-root normal approximation written out term by term.
double ncchi2_sankaran_cdf(double df, double lambda, double x);

struct OmpReference {
    std::vector<int> selected;
    std::vector<double> residual_norms;
};

/// Textbook OMP: correlate, pick the largest magnitude (lowest index on
/// ties), solve the normal equations on the selected columns.
OmpReference omp(const Vector& y, const Matrix& B, int T);

/// Fusion by direct tally: repeatedly pick the most frequent remaining index,
/// breaking ties by smaller mean selection position, then lower index.
std::vector<int> fuse_by_tally(std::span<const std::vector<int>> locals, int N, int k);

}  // namespace sparsedet::oracle
