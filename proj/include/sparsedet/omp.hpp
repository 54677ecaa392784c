#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sparsedet/detector.hpp"
#include "sparsedet/model.hpp"

namespace sparsedet {

/// Greedy selection record. residual_norms has iterations + 1 entries,
/// starting with ||y||.
struct OmpTrace {
    SupportSet selected;
    std::vector<double> residual_norms;
    int iterations = 0;
};

enum class Algorithm { KnownSupport, Somp, Dist1, Dist2, MlIgnoreSparsity };

std::string_view to_string(Algorithm algorithm);
/// Accepts the names produced by to_string; throws std::invalid_argument otherwise.
Algorithm algorithm_from_string(std::string_view name);

/// Messages each node sends to the fusion center:
/// centralized M, distributed-1 one, distributed-2 T0 + 1.
int messages_per_node(Algorithm algorithm, int M, int T0);

struct DetectionOutcome {
    Algorithm algorithm = Algorithm::Somp;
    double statistic = 0.0;
    double threshold = 0.0;
    Hypothesis decision = Hypothesis::H0;
    std::vector<double> per_node;
    /// Shared support (centralized), or one local support per node.
    std::vector<SupportSet> supports;
    /// Support after fusion (distributed-2 only).
    std::optional<SupportSet> fused_support;
    std::vector<OmpTrace> traces;
    int messages_per_node = 0;
};

/// Standard OMP for T iterations: pick the column with the largest
/// |<r, B(w)>| (lowest index on ties), then reproject y onto all selected
/// columns. Requires 1 <= T <= min(M, N).
OmpTrace omp_select(const Vector& y, const Matrix& B, int T);

/// Centralized S-OMP detection: one shared index sequence chosen by the
/// summed absolute correlations across nodes.
DetectionOutcome somp_detect(const ObservationSet& observations, const SensingEnsemble& sensing, int T0, double tau0);

/// Distributed approach 1: independent OMP per node, local energies summed.
DetectionOutcome dist1_detect(const ObservationSet& observations, const SensingEnsemble& sensing, int T0, double tau0);

/// Frequency-ranked union of local supports, truncated to k entries.
/// Frequency ties go to the index with the smaller mean selection position,
/// then to the lower index.
SupportSet fuse_supports(std::span<const SupportSet> locals, int k);

/// Distributed approach 2: local OMP supports are fused at the center and
/// every node reports its energy on the fused support.
DetectionOutcome dist2_detect(const ObservationSet& observations, const SensingEnsemble& sensing, int T0, int k,
                              double tau0);

/// Known-support detector on a given subset (no estimation).
DetectionOutcome known_support_detect(const ObservationSet& observations, const SensingEnsemble& sensing,
                                      const SupportSet& support_subset, double tau0);

/// Energy detector that ignores sparsity: projector onto the full column
/// span of each B_j (rank M), so the statistic equals sum_j ||y_j||^2.
DetectionOutcome ml_detect(const ObservationSet& observations, const SensingEnsemble& sensing, double tau0);

/// First-iteration success frequencies under H1.
struct P1P2Estimate {
    double p1 = 0.0;  // centralized first index lands in the true support
    double p2 = 0.0;  // at least one node's first index lands in the true support
    /// 1 - prod_j (1 - per-node success frequency).
    double p2_product_form = 0.0;
    std::vector<double> per_node_success;
    /// Trials where the argmax event and the rho < 1 event disagreed.
    int rho_mismatches = 0;
    int trials = 0;
};

/// Monte Carlo estimate with support, signals, sensing and noise redrawn
/// for every trial from substreams of seed.
P1P2Estimate estimate_p1_p2(const Scenario& scenario, int trials, std::uint64_t seed);

}  // namespace sparsedet
