#include "sparsedet/omp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sparsedet {

namespace {

// Index of the largest entry among those not yet selected; the lowest index
// wins ties.
int argmax_unselected(const Vector& score, const SupportSet& selected)
{
    int best = -1;
    double best_value = -1.0;
    for (Eigen::Index i = 0; i < score.size(); ++i) {
        const int index = static_cast<int>(i);
        if (score(i) > best_value && !selected.contains(index)) {
            best = index;
            best_value = score(i);
        }
    }
    return best;
}

// rho = max off-support score / max on-support score; the first greedy pick
// lands in the support exactly when rho < 1 (ties aside).
double support_ratio(const Vector& score, const SupportSet& support)
{
    double on = 0.0;
    double off = 0.0;
    for (Eigen::Index i = 0; i < score.size(); ++i) {
        double& side = support.contains(static_cast<int>(i)) ? on : off;
        side = std::max(side, score(i));
    }
    return off / on;
}

void check_iterations(int T, Eigen::Index M, Eigen::Index N)
{
    if (T < 1) {
        throw std::invalid_argument("OMP: need at least one iteration");
    }
    if (T > M || T > N) {
        throw std::invalid_argument("OMP: iterations " + std::to_string(T) + " exceed min(M, N)");
    }
}

void check_network(const ObservationSet& observations, const SensingEnsemble& sensing)
{
    if (observations.nodes() != sensing.nodes() || sensing.nodes() == 0) {
        throw std::invalid_argument("detection: observation and sensing node counts differ");
    }
    for (int j = 0; j < sensing.nodes(); ++j) {
        if (observations.measurements[j].size() != sensing.operators[j].rows()) {
            throw std::invalid_argument("detection: measurement length does not match operator rows");
        }
    }
}

DetectionOutcome finish_outcome(DetectionOutcome outcome, double tau0)
{
    outcome.statistic = std::accumulate(outcome.per_node.begin(), outcome.per_node.end(), 0.0);
    outcome.threshold = tau0;
    outcome.decision = outcome.statistic >= tau0 ? Hypothesis::H1 : Hypothesis::H0;
    return outcome;
}

}  // namespace

std::string_view to_string(Algorithm algorithm)
{
    switch (algorithm) {
    case Algorithm::KnownSupport:
        return "known_support";
    case Algorithm::Somp:
        return "somp";
    case Algorithm::Dist1:
        return "dist1";
    case Algorithm::Dist2:
        return "dist2";
    case Algorithm::MlIgnoreSparsity:
        return "ml_ignore_sparsity";
    }
    return "unknown";
}

Algorithm algorithm_from_string(std::string_view name)
{
    for (const auto a : {Algorithm::KnownSupport, Algorithm::Somp, Algorithm::Dist1, Algorithm::Dist2,
                         Algorithm::MlIgnoreSparsity}) {
        if (to_string(a) == name) {
            return a;
        }
    }
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

int messages_per_node(Algorithm algorithm, int M, int T0)
{
    switch (algorithm) {
    case Algorithm::Somp:
    case Algorithm::MlIgnoreSparsity:
    case Algorithm::KnownSupport:
        // Every node forwards its raw compressed vector.
        return M;
    case Algorithm::Dist1:
        return 1;
    case Algorithm::Dist2:
        return T0 + 1;
    }
    return 0;
}

OmpTrace omp_select(const Vector& y, const Matrix& B, int T)
{
    if (y.size() != B.rows()) {
        throw std::invalid_argument("omp_select: measurement length does not match operator rows");
    }
    check_iterations(T, B.rows(), B.cols());

    OmpTrace trace;
    trace.selected = SupportSet({}, static_cast<int>(B.cols()));
    trace.residual_norms.push_back(y.norm());
    Vector residual = y;
    for (int t = 1; t <= T; ++t) {
        const Vector score = (B.transpose() * residual).cwiseAbs();
        trace.selected.push_back(argmax_unselected(score, trace.selected));
        const auto projector = SubspaceProjector::from_support(B, trace.selected);
        residual = projector.apply_complement(y);
        trace.residual_norms.push_back(residual.norm());
    }
    trace.iterations = T;
    return trace;
}

DetectionOutcome somp_detect(const ObservationSet& observations, const SensingEnsemble& sensing, int T0, double tau0)
{
    check_network(observations, sensing);
    check_iterations(T0, sensing.rows(), sensing.cols());
    const int L = sensing.nodes();

    SupportSet selected({}, sensing.cols());
    std::vector<Vector> residuals = observations.measurements;
    std::vector<OmpTrace> traces(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) {
        traces[j].residual_norms.push_back(residuals[j].norm());
    }
    std::vector<SubspaceProjector> projectors(static_cast<std::size_t>(L), SubspaceProjector(sensing.rows()));

    for (int t = 1; t <= T0; ++t) {
        Vector score = Vector::Zero(sensing.cols());
        for (int j = 0; j < L; ++j) {
            score += (sensing.operators[j].transpose() * residuals[j]).cwiseAbs();
        }
        selected.push_back(argmax_unselected(score, selected));
        for (int j = 0; j < L; ++j) {
            projectors[j] = SubspaceProjector::from_support(sensing.operators[j], selected);
            residuals[j] = projectors[j].apply_complement(observations.measurements[j]);
            traces[j].residual_norms.push_back(residuals[j].norm());
        }
    }

    DetectionOutcome outcome;
    outcome.algorithm = Algorithm::Somp;
    outcome.per_node = node_statistics(projectors, observations);
    outcome.supports = {selected};
    for (auto& trace : traces) {
        trace.selected = selected;
        trace.iterations = T0;
    }
    outcome.traces = std::move(traces);
    outcome.messages_per_node = messages_per_node(Algorithm::Somp, sensing.rows(), T0);
    return finish_outcome(std::move(outcome), tau0);
}

namespace {

std::vector<OmpTrace> local_supports(const ObservationSet& observations, const SensingEnsemble& sensing, int T0)
{
    std::vector<OmpTrace> traces;
    traces.reserve(static_cast<std::size_t>(sensing.nodes()));
    for (int j = 0; j < sensing.nodes(); ++j) {
        traces.push_back(omp_select(observations.measurements[j], sensing.operators[j], T0));
    }
    return traces;
}

}  // namespace

DetectionOutcome dist1_detect(const ObservationSet& observations, const SensingEnsemble& sensing, int T0, double tau0)
{
    check_network(observations, sensing);
    DetectionOutcome outcome;
    outcome.algorithm = Algorithm::Dist1;
    outcome.traces = local_supports(observations, sensing, T0);
    for (int j = 0; j < sensing.nodes(); ++j) {
        const auto& support = outcome.traces[j].selected;
        const auto projector = SubspaceProjector::from_support(sensing.operators[j], support);
        outcome.per_node.push_back(projector.captured_energy(observations.measurements[j]));
        outcome.supports.push_back(support);
    }
    outcome.messages_per_node = messages_per_node(Algorithm::Dist1, sensing.rows(), T0);
    return finish_outcome(std::move(outcome), tau0);
}

SupportSet fuse_supports(std::span<const SupportSet> locals, int k)
{
    if (locals.empty()) {
        throw std::invalid_argument("fuse_supports: no local supports");
    }
    if (k < 1) {
        throw std::invalid_argument("fuse_supports: need k >= 1");
    }
    const int T0 = locals.front().size();
    const int N = locals.front().ambient_dim();
    struct Tally {
        int count = 0;
        int position_sum = 0;
    };
    std::map<int, Tally> tally;
    for (const auto& local : locals) {
        if (local.size() != T0 || local.ambient_dim() != N) {
            throw std::invalid_argument("fuse_supports: local supports must share size and ambient dimension");
        }
        for (int pos = 0; pos < local.size(); ++pos) {
            auto& entry = tally[local.indices()[static_cast<std::size_t>(pos)]];
            ++entry.count;
            entry.position_sum += pos;
        }
    }
    std::vector<std::pair<int, Tally>> ranked(tally.begin(), tally.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.count != b.second.count) {
            return a.second.count > b.second.count;
        }
        // Mean position comparison without division.
        const long lhs = static_cast<long>(a.second.position_sum) * b.second.count;
        const long rhs = static_cast<long>(b.second.position_sum) * a.second.count;
        if (lhs != rhs) {
            return lhs < rhs;
        }
        return a.first < b.first;
    });
    const auto keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
    std::vector<int> fused;
    fused.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        fused.push_back(ranked[i].first);
    }
    return SupportSet(std::move(fused), N);
}

DetectionOutcome dist2_detect(const ObservationSet& observations, const SensingEnsemble& sensing, int T0, int k,
                              double tau0)
{
    check_network(observations, sensing);
    if (T0 > k) {
        throw std::invalid_argument("dist2_detect: need T0 <= k");
    }
    DetectionOutcome outcome;
    outcome.algorithm = Algorithm::Dist2;
    outcome.traces = local_supports(observations, sensing, T0);
    for (const auto& trace : outcome.traces) {
        outcome.supports.push_back(trace.selected);
    }
    const SupportSet fused = fuse_supports(outcome.supports, k);
    for (int j = 0; j < sensing.nodes(); ++j) {
        const auto projector = SubspaceProjector::from_support(sensing.operators[j], fused);
        outcome.per_node.push_back(projector.captured_energy(observations.measurements[j]));
    }
    outcome.fused_support = fused;
    outcome.messages_per_node = messages_per_node(Algorithm::Dist2, sensing.rows(), T0);
    return finish_outcome(std::move(outcome), tau0);
}

DetectionOutcome known_support_detect(const ObservationSet& observations, const SensingEnsemble& sensing,
                                      const SupportSet& support_subset, double tau0)
{
    check_network(observations, sensing);
    DetectionOutcome outcome;
    outcome.algorithm = Algorithm::KnownSupport;
    const auto projectors = projectors_for_support(sensing, support_subset);
    outcome.per_node = node_statistics(projectors, observations);
    outcome.supports = {support_subset};
    outcome.messages_per_node = messages_per_node(Algorithm::KnownSupport, sensing.rows(), support_subset.size());
    return finish_outcome(std::move(outcome), tau0);
}

DetectionOutcome ml_detect(const ObservationSet& observations, const SensingEnsemble& sensing, double tau0)
{
    check_network(observations, sensing);
    DetectionOutcome outcome;
    outcome.algorithm = Algorithm::MlIgnoreSparsity;
    for (int j = 0; j < sensing.nodes(); ++j) {
        // B_j^T B_j is N x N of rank M; the rank-revealing factorization
        // plays the role of the pseudo-inverse.
        const SubspaceProjector projector(sensing.operators[j]);
        outcome.per_node.push_back(projector.captured_energy(observations.measurements[j]));
    }
    outcome.messages_per_node = messages_per_node(Algorithm::MlIgnoreSparsity, sensing.rows(), 0);
    return finish_outcome(std::move(outcome), tau0);
}

P1P2Estimate estimate_p1_p2(const Scenario& scenario, int trials, std::uint64_t seed)
{
    if (trials < 1) {
        throw std::invalid_argument("estimate_p1_p2: need at least one trial");
    }
    const int L = scenario.L;
    P1P2Estimate out;
    out.trials = trials;
    std::vector<int> node_hits(static_cast<std::size_t>(L), 0);
    int central_hits = 0;
    int any_hits = 0;

    for (int trial = 0; trial < trials; ++trial) {
        auto rng = Rng::stream(seed, {static_cast<std::uint64_t>(trial)});
        const auto support = draw_support(scenario.N, scenario.k, rng);
        const auto signals = draw_signals(support, L, scenario.range, rng);
        const auto sensing = draw_sensing(scenario.M, scenario.N, L, rng);
        const auto obs = observe(signals, sensing, Hypothesis::H1, scenario.sigma2, rng);

        const SupportSet none({}, scenario.N);
        Vector summed = Vector::Zero(scenario.N);
        bool any = false;
        for (int j = 0; j < L; ++j) {
            const Vector corr = (sensing.operators[j].transpose() * obs.measurements[j]).cwiseAbs();
            summed += corr;
            const bool hit = support.contains(argmax_unselected(corr, none));
            node_hits[j] += hit;
            any = any || hit;

            out.rho_mismatches += (support_ratio(corr, support) < 1.0) != hit;
        }
        const bool central = support.contains(argmax_unselected(summed, none));
        central_hits += central;
        any_hits += any;

        out.rho_mismatches += (support_ratio(summed, support) < 1.0) != central;
    }

    out.p1 = static_cast<double>(central_hits) / trials;
    out.p2 = static_cast<double>(any_hits) / trials;
    double all_fail = 1.0;
    for (const int hits : node_hits) {
        const double p = static_cast<double>(hits) / trials;
        out.per_node_success.push_back(p);
        all_fail *= 1.0 - p;
    }
    out.p2_product_form = 1.0 - all_fail;
    return out;
}

}  // namespace sparsedet
