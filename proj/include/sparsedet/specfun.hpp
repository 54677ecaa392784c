#pragma once

// Special functions behind the closed-form detection probabilities:
// Gaussian tail, regularized incomplete gamma, central and noncentral
// chi-squared distributions, the generalized Marcum Q function, and the
// cube-root normal (Sankaran) approximations to the chi-squared cdfs.
//
// Every function is pure. Domain violations throw std::domain_error.

namespace sparsedet::specfun {

/// A probability in [0, 1].
class TailProb {
public:
    /// Values within 1e-12 outside [0, 1] are treated as rounding and clamped;
    /// anything further out (or NaN) throws std::domain_error.
    explicit TailProb(double value);
    /// Carries a separately computed 1 - value, so probabilities close to 1
    /// keep their full relative precision on the complement side.
    TailProb(double value, double complement);

    double value() const noexcept { return value_; }
    double complement() const noexcept { return complement_; }
    operator double() const noexcept { return value_; }

private:
    double value_;
    double complement_;
};

/// Upper tail of the standard normal, Q(x) = P(Z > x).
TailProb gaussian_q(double x);

/// Inverse of gaussian_q on (0, 1). Probabilities above 1/2 are inverted
/// through their complement.
double gaussian_q_inv(TailProb p);
double gaussian_q_inv(double p);

/// P(a, x) = gamma(a, x) / Gamma(a).
TailProb reg_lower_gamma(double a, double x);

/// Q(a, x) = 1 - P(a, x), evaluated without cancellation.
TailProb reg_upper_gamma(double a, double x);

TailProb chi2_cdf(double df, double x);
TailProb chi2_sf(double df, double x);

/// Noncentral chi-squared cdf as a Poisson(noncentrality/2) mixture of
/// central cdfs. The mixture is truncated once the neglected Poisson mass
/// is provably below 1e-14.
TailProb ncchi2_cdf(double df, double noncentrality, double x);
TailProb ncchi2_sf(double df, double noncentrality, double x);

/// Generalized Marcum Q function Q_M(a, b) for real order M >= 1.
/// Uses Q_M(a, b) = 1 - F_{ncchi2}(b^2; 2M, a^2).
TailProb marcum_q(double order, double a, double b);

/// Cube-root normal approximation of the central chi-squared cdf.
/// Returns the raw formula value without clamping.
double chi2_cdf_sankaran(double df, double x);

/// Sankaran's approximation of the noncentral chi-squared cdf, with
///   h = 1 - (2/3)(k+l)(k+3l)/(k+2l)^2,  p = (k+2l)/(k+l)^2,  m = (h-1)(1-3h).
/// Returns the raw formula value without clamping.
double ncchi2_cdf_sankaran(double df, double noncentrality, double x);

/// Argument z of the noncentral Sankaran approximation, cdf ~ 1 - Q(z).
double ncchi2_sankaran_argument(double df, double noncentrality, double x);

}  // namespace sparsedet::specfun
