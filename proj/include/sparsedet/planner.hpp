#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "sparsedet/detector.hpp"

namespace sparsedet {

enum class PlannerStatus { AchievedAtOne, Interior, Infeasible };

std::string_view to_string(PlannerStatus status);

struct PlannerResult {
    PlannerStatus status = PlannerStatus::Infeasible;
    std::optional<double> t_continuous;
    std::optional<int> t_hat;
    /// Q(f(t_hat)); may fall short of tau_d when rounding crosses the root.
    std::optional<double> pd_at_t_hat;
    /// t_hat / k.
    std::optional<double> fraction;
    /// Number of upward crossings of Q(f(t)) = tau_d seen in the pre-scan.
    int root_count = 0;
    /// Set when a root was skipped because f' > 0 there.
    bool rejected_rising_root = false;
    /// Largest Q(f(t)) seen in the pre-scan of [1, k].
    double pd_max_scanned = 0.0;
};

/// Argument of the Gaussian tail in P_d(t) ~ Q(f(t)), combining the
/// equal-magnitude noncentrality, the cube-root threshold and the noncentral
/// cube-root cdf approximation. t is real-valued in [1, k].
double f_of_t(double t, const TheoryInputs& inputs);

/// Q(f(t)).
double pd_approx(double t, const TheoryInputs& inputs);

/// Central difference with step max(1e-5, 1e-5 t); one-sided at the ends of [1, k].
double f_prime(double t, const TheoryInputs& inputs);

/// Smallest integer t in [1, k-1] with Q(f(t)) >= tau_d after relaxing the
/// integer restriction and rounding to nearest. Requires k > 1.
PlannerResult solve_min_fraction(const TheoryInputs& inputs);

/// One planner result per (tau_d, alpha) cell; rows follow tau_d.
std::vector<std::vector<PlannerResult>> min_fraction_map(std::span<const double> tau_d_grid,
                                                         std::span<const double> alpha_grid,
                                                         const TheoryInputs& base);

}  // namespace sparsedet
