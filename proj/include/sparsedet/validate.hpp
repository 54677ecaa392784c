#pragma once

#include <string>
#include <vector>

#include "sparsedet/harness.hpp"

namespace sparsedet {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Small seeded configuration used for the reproducibility check.
ExperimentConfig validation_config();

/// Always-on property suite: special-function oracles, projector algebra,
/// OMP invariants, single-node coincidence, fusion tally, message table and
/// byte-identical reruns of run_roc on base.
std::vector<CheckResult> run_validation_suite(const ExperimentConfig& base);

}  // namespace sparsedet
