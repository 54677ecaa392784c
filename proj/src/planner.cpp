#include "sparsedet/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sparsedet {

namespace {

constexpr int kScanPoints = 512;
constexpr double kRootTolerance = 1e-10;

void check_model(const TheoryInputs& in)
{
    auto fail = [](const char* what) { throw std::invalid_argument(std::string("planner: ") + what); };
    if (in.k < 1 || in.k >= in.N) fail("need 1 <= k < N");
    if (in.M < 1 || in.M >= in.N) fail("need 1 <= M < N");
    if (in.L < 1) fail("need L >= 1");
    if (static_cast<int>(in.gamma.size()) != in.L) fail("need one SNR per node");
    if (!(in.sigma2 > 0.0)) fail("need sigma2 > 0");
    if (!(in.alpha > 0.0 && in.alpha < 1.0)) fail("need alpha in (0, 1)");
}

}  // namespace

std::string_view to_string(PlannerStatus status)
{
    switch (status) {
    case PlannerStatus::AchievedAtOne:
        return "achieved_at_one";
    case PlannerStatus::Interior:
        return "interior";
    case PlannerStatus::Infeasible:
        return "infeasible";
    }
    return "unknown";
}

double f_of_t(double t, const TheoryInputs& inputs)
{
    check_model(inputs);
    const double tl = t * inputs.L;
    const double lambda = noncentrality_approx(t, inputs);
    if (!(tl + lambda > 0.0) || lambda < 0.0) {
        throw std::invalid_argument("f_of_t: degenerate degrees of freedom / noncentrality");
    }
    // A non-positive approximate threshold means every statistic exceeds it.
    const double tau0 = threshold_sankaran(inputs.alpha, t, inputs.L, inputs.sigma2);
    const double x = std::max(0.0, tau0 / inputs.sigma2);
    return specfun::ncchi2_sankaran_argument(tl, lambda, x);
}

double pd_approx(double t, const TheoryInputs& inputs)
{
    return specfun::gaussian_q(f_of_t(t, inputs)).value();
}

double f_prime(double t, const TheoryInputs& inputs)
{
    const double k = inputs.k;
    if (t < 1.0 || t > k) {
        throw std::invalid_argument("f_prime: t outside [1, k]");
    }
    const double step = std::max(1e-5, 1e-5 * t);
    const double lo = t - step;
    const double hi = t + step;
    if (lo < 1.0) {
        return (f_of_t(hi, inputs) - f_of_t(t, inputs)) / step;
    }
    if (hi > k) {
        return (f_of_t(t, inputs) - f_of_t(lo, inputs)) / step;
    }
    return (f_of_t(hi, inputs) - f_of_t(lo, inputs)) / (2.0 * step);
}

PlannerResult solve_min_fraction(const TheoryInputs& inputs)
{
    if (inputs.k <= 1) {
        throw std::invalid_argument("solve_min_fraction: need k > 1");
    }
    check_model(inputs);
    if (!(inputs.tau_d > 0.0 && inputs.tau_d < 1.0)) {
        throw std::invalid_argument("solve_min_fraction: need tau_d in (0, 1)");
    }

    const double k = inputs.k;
    const double tau_d = inputs.tau_d;

    std::vector<double> ts(kScanPoints);
    std::vector<double> pd(kScanPoints);
    for (int i = 0; i < kScanPoints; ++i) {
        ts[i] = i == kScanPoints - 1 ? k : 1.0 + (k - 1.0) * i / (kScanPoints - 1);
        pd[i] = pd_approx(ts[i], inputs);
    }

    PlannerResult result;
    result.pd_max_scanned = *std::max_element(pd.begin(), pd.end());

    auto finish = [&](PlannerStatus status, double t_cont) {
        result.status = status;
        result.t_continuous = t_cont;
        const int rounded = static_cast<int>(std::floor(t_cont + 0.5));
        result.t_hat = std::clamp(rounded, 1, inputs.k - 1);
        result.pd_at_t_hat = pd_approx(*result.t_hat, inputs);
        result.fraction = static_cast<double>(*result.t_hat) / inputs.k;
        return result;
    };

    std::vector<int> crossings;
    for (int i = 0; i + 1 < kScanPoints; ++i) {
        if (pd[i] < tau_d && pd[i + 1] >= tau_d) {
            crossings.push_back(i);
        }
    }
    result.root_count = static_cast<int>(crossings.size());

    if (tau_d <= pd.front()) {
        return finish(PlannerStatus::AchievedAtOne, 1.0);
    }
    if (!(tau_d < pd.back())) {
        result.status = PlannerStatus::Infeasible;
        return result;
    }

    for (const int i : crossings) {
        double lo = ts[i];
        double hi = ts[i + 1];
        while (hi - lo > kRootTolerance) {
            const double mid = 0.5 * (lo + hi);
            if (pd_approx(mid, inputs) < tau_d) {
                lo = mid;
            }
            else {
                hi = mid;
            }
        }
        const double root = 0.5 * (lo + hi);
        if (f_prime(root, inputs) <= 0.0) {
            return finish(PlannerStatus::Interior, root);
        }
        result.rejected_rising_root = true;
    }
    result.status = PlannerStatus::Infeasible;
    return result;
}

std::vector<std::vector<PlannerResult>> min_fraction_map(std::span<const double> tau_d_grid,
                                                         std::span<const double> alpha_grid,
                                                         const TheoryInputs& base)
{
    if (tau_d_grid.empty() || alpha_grid.empty()) {
        throw std::invalid_argument("min_fraction_map: grids must be nonempty");
    }
    std::vector<std::vector<PlannerResult>> out;
    out.reserve(tau_d_grid.size());
    for (const double tau_d : tau_d_grid) {
        std::vector<PlannerResult> row;
        row.reserve(alpha_grid.size());
        for (const double alpha : alpha_grid) {
            TheoryInputs cell = base;
            cell.tau_d = tau_d;
            cell.alpha = alpha;
            row.push_back(solve_min_fraction(cell));
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace sparsedet
