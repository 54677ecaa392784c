#include "sparsedet/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sparsedet::specfun {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 200000;
constexpr double kPoissonTailMass = 1e-14;

void require(bool ok, const char* what)
{
    if (!ok) {
        throw std::domain_error(what);
    }
}

// Series for P(a, x); converges quickly for x < a + 1.
double lower_gamma_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxIterations; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) {
            break;
        }
    }
    return sum * std::exp(a * std::log(x) - x - std::lgamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x), x >= a + 1.
double upper_gamma_fraction(double a, double x)
{
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = b + an / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            break;
        }
    }
    return std::exp(a * std::log(x) - x - std::lgamma(a)) * h;
}

struct GammaPair {
    double lower;
    double upper;
};

GammaPair regularized_gamma(double a, double x)
{
    require(std::isfinite(a) && a > 0.0, "regularized gamma: shape must be positive");
    require(!std::isnan(x) && x >= 0.0, "regularized gamma: x must be non-negative");
    if (x == 0.0) {
        return {0.0, 1.0};
    }
    if (std::isinf(x)) {
        return {1.0, 0.0};
    }
    if (x < a + 1.0) {
        const double p = lower_gamma_series(a, x);
        return {p, 1.0 - p};
    }
    const double q = upper_gamma_fraction(a, x);
    return {1.0 - q, q};
}

double clamp_unit(double v)
{
    if (v < 0.0) {
        return 0.0;
    }
    if (v > 1.0) {
        return 1.0;
    }
    return v;
}

// Poisson(mu)-weighted sum of central terms, summed outward from the mode.
// The neglected mass on each side is bounded by a geometric series.
template <typename Term>
double poisson_mixture(double mu, Term&& term)
{
    const double mode = std::floor(mu);
    const double w_mode = std::exp(-mu + mode * std::log(mu) - std::lgamma(mode + 1.0));

    double sum = 0.0;
    double w = w_mode;
    for (double j = mode;; j += 1.0) {
        sum += w * term(j);
        const double w_next = w * mu / (j + 1.0);
        const double ratio = mu / (j + 2.0);
        if (ratio < 1.0 && w_next / (1.0 - ratio) < 0.5 * kPoissonTailMass) {
            break;
        }
        w = w_next;
    }

    w = w_mode;
    for (double j = mode - 1.0; j >= 0.0; j -= 1.0) {
        w *= (j + 1.0) / mu;
        sum += w * term(j);
        const double ratio = j / mu;
        if (w * ratio / (1.0 - ratio) < 0.5 * kPoissonTailMass) {
            break;
        }
    }
    return sum;
}

void check_chi2_args(double df, double x)
{
    require(std::isfinite(df) && df > 0.0, "chi-squared: degrees of freedom must be positive");
    require(!std::isnan(x) && x >= 0.0, "chi-squared: x must be non-negative");
}

void check_ncchi2_args(double df, double nc, double x)
{
    check_chi2_args(df, x);
    require(std::isfinite(nc) && nc >= 0.0, "noncentral chi-squared: noncentrality must be non-negative");
}

}  // namespace

TailProb::TailProb(double value)
    : value_(value)
{
    constexpr double slack = 1e-12;
    if (!(value >= -slack && value <= 1.0 + slack)) {
        throw std::domain_error("probability outside [0, 1]: " + std::to_string(value));
    }
    value_ = clamp_unit(value);
    complement_ = 1.0 - value_;
}

TailProb::TailProb(double value, double complement)
    : TailProb(value)
{
    if (!(std::abs(value + complement - 1.0) <= 1e-12)) {
        throw std::domain_error("probability and complement do not sum to one");
    }
    complement_ = clamp_unit(complement);
}

TailProb gaussian_q(double x)
{
    require(std::isfinite(x), "gaussian_q: argument must be finite");
    return TailProb(0.5 * std::erfc(x / std::numbers::sqrt2), 0.5 * std::erfc(-x / std::numbers::sqrt2));
}

double gaussian_q_inv(double p)
{
    return gaussian_q_inv(TailProb(p));
}

double gaussian_q_inv(TailProb p)
{
    require(p.value() > 0.0 && p.value() < 1.0, "gaussian_q_inv: probability must lie in (0, 1)");
    if (p.value() == 0.5) {
        return 0.0;
    }
    // Solve in the upper tail and reflect.
    const bool reflect = p.value() > 0.5;
    const double target = reflect ? p.complement() : p.value();
    const double log_target = std::log(target);

    double lo = 0.0;
    double hi = 40.0;
    double x = std::sqrt(-2.0 * log_target);
    x = std::min(std::max(x - 0.5, 0.0), hi);

    for (int iter = 0; iter < 200; ++iter) {
        const double q = 0.5 * std::erfc(x / std::numbers::sqrt2);
        if (q > target) {
            lo = x;
        }
        else {
            hi = x;
        }
        double next;
        if (q > 0.0) {
            // Newton on log Q(x) - log p.
            const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
            next = x + (std::log(q) - log_target) * q / pdf;
        }
        else {
            next = 0.5 * (lo + hi);
        }
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        const double step = std::abs(next - x);
        x = next;
        if (step <= 1e-15 * std::max(1.0, x) || hi - lo <= 1e-15 * std::max(1.0, x)) {
            break;
        }
    }
    return reflect ? -x : x;
}

TailProb reg_lower_gamma(double a, double x)
{
    return TailProb(regularized_gamma(a, x).lower);
}

TailProb reg_upper_gamma(double a, double x)
{
    return TailProb(regularized_gamma(a, x).upper);
}

TailProb chi2_cdf(double df, double x)
{
    check_chi2_args(df, x);
    return reg_lower_gamma(0.5 * df, 0.5 * x);
}

TailProb chi2_sf(double df, double x)
{
    check_chi2_args(df, x);
    return reg_upper_gamma(0.5 * df, 0.5 * x);
}

TailProb ncchi2_cdf(double df, double noncentrality, double x)
{
    check_ncchi2_args(df, noncentrality, x);
    if (noncentrality == 0.0) {
        return chi2_cdf(df, x);
    }
    if (x == 0.0) {
        return TailProb(0.0);
    }
    const double half_df = 0.5 * df;
    const double y = 0.5 * x;
    const double sum = poisson_mixture(0.5 * noncentrality, [&](double j) {
        return regularized_gamma(half_df + j, y).lower;
    });
    return TailProb(clamp_unit(sum));
}

TailProb ncchi2_sf(double df, double noncentrality, double x)
{
    check_ncchi2_args(df, noncentrality, x);
    if (noncentrality == 0.0) {
        return chi2_sf(df, x);
    }
    if (x == 0.0) {
        return TailProb(1.0);
    }
    const double half_df = 0.5 * df;
    const double y = 0.5 * x;
    const double sum = poisson_mixture(0.5 * noncentrality, [&](double j) {
        return regularized_gamma(half_df + j, y).upper;
    });
    return TailProb(clamp_unit(sum));
}

TailProb marcum_q(double order, double a, double b)
{
    require(std::isfinite(order) && order >= 1.0, "marcum_q: order must be >= 1");
    require(std::isfinite(a) && a >= 0.0, "marcum_q: a must be non-negative");
    require(!std::isnan(b) && b >= 0.0, "marcum_q: b must be non-negative");
    return ncchi2_sf(2.0 * order, a * a, b * b);
}

double chi2_cdf_sankaran(double df, double x)
{
    check_chi2_args(df, x);
    const double v = 2.0 / (9.0 * df);
    const double z = (std::cbrt(x / df) - (1.0 - v)) / std::sqrt(v);
    // 1 - Q(z) written as Q(-z) to avoid cancellation.
    return gaussian_q(-z).value();
}

double ncchi2_sankaran_argument(double df, double noncentrality, double x)
{
    check_ncchi2_args(df, noncentrality, x);
    const double k = df;
    const double l = noncentrality;
    const double h = 1.0 - (2.0 / 3.0) * (k + l) * (k + 3.0 * l) / ((k + 2.0 * l) * (k + 2.0 * l));
    const double p = (k + 2.0 * l) / ((k + l) * (k + l));
    const double m = (h - 1.0) * (1.0 - 3.0 * h);
    const double numerator =
        std::pow(x / (k + l), h) - (1.0 + h * p * (h - 1.0 - 0.5 * (2.0 - h) * m * p));
    const double denominator = h * std::sqrt(2.0 * p) * (1.0 + 0.5 * m * p);
    return numerator / denominator;
}

double ncchi2_cdf_sankaran(double df, double noncentrality, double x)
{
    return gaussian_q(-ncchi2_sankaran_argument(df, noncentrality, x)).value();
}

}  // namespace sparsedet::specfun
