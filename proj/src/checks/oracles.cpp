#include "sparsedet/oracles.hpp"

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sparsedet::oracle {

namespace {

double upper_normal_tail(double x)
{
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto density = [norm](double t) { return norm * std::exp(-0.5 * t * t); };
    if (x >= 0.0) {
        boost::math::quadrature::exp_sinh<double> integrator;
        return integrator.integrate(density, x, std::numeric_limits<double>::infinity());
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    return 0.5 + integrator.integrate(density, x, 0.0);
}

}  // namespace

double gaussian_q(double x)
{
    return upper_normal_tail(x);
}

double reg_lower_gamma(double a, double x)
{
    if (x <= 0.0) {
        return 0.0;
    }
    const double log_gamma = std::lgamma(a);
    auto integrand = [a, log_gamma](double t) {
        return t <= 0.0 ? 0.0 : std::exp((a - 1.0) * std::log(t) - t - log_gamma);
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(integrand, 0.0, x);
}

double marcum_q(double order, double a, double b)
{
    const double nu = order - 1.0;
    auto integrand = [&](double x) -> double {
        // Beyond a + 40 the Gaussian factor is below e^-800.
        if (x <= 0.0 || x - a > 40.0) {
            return 0.0;
        }
        if (a == 0.0) {
            // (x/a)^nu I_nu(a x) -> x^(2 nu) / (2^nu Gamma(nu + 1)) as a -> 0.
            return std::exp(std::log(x) * (2.0 * nu + 1.0) - 0.5 * x * x - nu * std::log(2.0) -
                            std::lgamma(nu + 1.0));
        }
        const double bessel = boost::math::cyl_bessel_i(nu, a * x);
        return x * std::pow(x / a, nu) * std::exp(-0.5 * (x * x + a * a)) * bessel;
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(integrand, b, std::numeric_limits<double>::infinity());
}

double ncchi2_cdf_series(double df, double lambda, double x, double tail)
{
    if (lambda == 0.0) {
        return boost::math::gamma_p(0.5 * df, 0.5 * x);
    }
    const boost::math::poisson_distribution<double> poisson(0.5 * lambda);
    double sum = 0.0;
    for (int i = 0;; ++i) {
        sum += boost::math::pdf(poisson, i) * boost::math::gamma_p(0.5 * df + i, 0.5 * x);
        if (boost::math::cdf(boost::math::complement(poisson, i)) < tail) {
            break;
        }
        if (i > 1000000) {
            throw std::runtime_error("ncchi2_cdf_series: no convergence");
        }
    }
    return sum;
}

double ncchi2_sankaran_cdf(double df, double lambda, double x)
{
    const double k = df;
    const double l = lambda;
    const double h = 1.0 - (2.0 / 3.0) * (k + l) * (k + 3.0 * l) / ((k + 2.0 * l) * (k + 2.0 * l));
    const double p = (k + 2.0 * l) / ((k + l) * (k + l));
    const double m = (h - 1.0) * (1.0 - 3.0 * h);
    const double num = std::pow(x / (k + l), h) - (1.0 + h * p * (h - 1.0 - 0.5 * (2.0 - h) * m * p));
    const double den = h * std::sqrt(2.0 * p) * (1.0 + 0.5 * m * p);
    return 1.0 - upper_normal_tail(num / den);
}

OmpReference omp(const Vector& y, const Matrix& B, int T)
{
    OmpReference out;
    Vector r = y;
    out.residual_norms.push_back(r.norm());
    for (int step = 0; step < T; ++step) {
        const Vector corr = B.transpose() * r;
        int best = -1;
        for (int i = 0; i < B.cols(); ++i) {
            bool taken = false;
            for (const int s : out.selected) {
                taken = taken || s == i;
            }
            if (!taken && (best < 0 || std::abs(corr(i)) > std::abs(corr(best)))) {
                best = i;
            }
        }
        out.selected.push_back(best);
        Matrix sub(B.rows(), static_cast<Eigen::Index>(out.selected.size()));
        for (std::size_t c = 0; c < out.selected.size(); ++c) {
            sub.col(static_cast<Eigen::Index>(c)) = B.col(out.selected[c]);
        }
        const Vector coef = (sub.transpose() * sub).ldlt().solve(sub.transpose() * y);
        r = y - sub * coef;
        out.residual_norms.push_back(r.norm());
    }
    return out;
}

std::vector<int> fuse_by_tally(std::span<const std::vector<int>> locals, int N, int k)
{
    if (locals.empty()) {
        throw std::invalid_argument("fuse_by_tally: no local supports");
    }
    std::vector<long> count(static_cast<std::size_t>(N), 0);
    std::vector<long> position_sum(static_cast<std::size_t>(N), 0);
    for (const auto& local : locals) {
        for (std::size_t p = 0; p < local.size(); ++p) {
            count[local[p]] += 1;
            position_sum[local[p]] += static_cast<long>(p);
        }
    }
    std::vector<int> out;
    while (static_cast<int>(out.size()) < k) {
        int best = -1;
        for (int i = 0; i < N; ++i) {
            if (count[i] == 0) {
                continue;
            }
            if (best < 0 || count[i] > count[best] ||
                (count[i] == count[best] && position_sum[i] * count[best] < position_sum[best] * count[i])) {
                best = i;
            }
        }
        if (best < 0) {
            break;
        }
        out.push_back(best);
        count[best] = 0;
    }
    return out;
}

}  // namespace sparsedet::oracle
