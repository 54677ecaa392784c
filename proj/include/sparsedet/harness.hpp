#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sparsedet/omp.hpp"
#include "sparsedet/planner.hpp"

namespace sparsedet {

/// Invalid experiment configuration; path names the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message)
        , path_(std::move(path))
    {
    }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

enum class ThresholdPolicy { Sweep, ExactAlpha, SankaranAlpha };

/// Which random components are redrawn per trial (false freezes the
/// component for the whole experiment). Noise is always redrawn.
struct RedrawPolicy {
    bool support = true;
    bool signals = true;
    bool sensing = true;
};

struct ExperimentConfig {
    Scenario scenario;
    double c_r = 0.1;
    std::optional<double> snr_db;  // when set, scenario.sigma2 was derived from it
    int T0 = 1;
    int trials = 2000;
    std::uint64_t seed = 1;
    std::vector<Algorithm> algorithms{Algorithm::Somp, Algorithm::Dist1, Algorithm::Dist2};
    ThresholdPolicy threshold_policy = ThresholdPolicy::Sweep;
    double alpha = 0.1;
    RedrawPolicy redraw;
    int threads = 0;  // 0 = hardware concurrency
    int repetitions = 20;
    int bootstrap = 200;
    std::vector<double> tau_d_grid;
    std::vector<double> alpha_grid;
    std::vector<double> c_r_grid;
    bool empirical_pd = false;

    /// Same config with c_r (and therefore M, and sigma2 when snr_db is set) replaced.
    ExperimentConfig with_compression(double compression_ratio) const;
};

/// Measurements per node for a compression ratio: round(c_r N).
int rows_for_compression(double c_r, int N);

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Monte Carlo statistics and ROC curves

/// Per-trial statistics of one algorithm under both hypotheses.
struct TrialStatistics {
    Algorithm algorithm = Algorithm::Somp;
    std::vector<double> h0;
    std::vector<double> h1;
    int messages_per_node = 0;
};

struct RocPoint {
    double threshold = 0.0;
    double pf = 0.0;
    double pd = 0.0;
    int trials = 0;
};

struct RocCurve {
    Algorithm algorithm = Algorithm::Somp;
    std::vector<RocPoint> points;
    int messages_per_node = 0;
    /// Points where pd + 3 * MC error < pf.
    int validity_violations = 0;
};

struct RocResult {
    std::vector<RocCurve> curves;
    std::vector<TrialStatistics> statistics;
    /// Largest relative deviation of the ML statistic from sum ||y_j||^2.
    double ml_identity_error = 0.0;
};

inline constexpr int kQuantileLevels = 129;

/// Strictly increasing thresholds at the i/(levels-1) empirical quantiles of h0.
std::vector<double> quantile_thresholds(std::span<const double> h0, int levels = kQuantileLevels);

/// Empirical (pf, pd) at each threshold; a statistic >= threshold decides H1.
RocCurve roc_from_statistics(const TrialStatistics& stats, std::span<const double> thresholds);

/// Trapezoid area under the curve with the (0,0) and (1,1) endpoints added.
double auc(std::span<const RocPoint> points);

/// AUC of the quantile-sweep curve.
double sweep_auc(std::span<const double> h0, std::span<const double> h1);

/// Bootstrap standard errors of sweep AUCs. Trials are resampled jointly
/// across algorithms, so difference_se captures the pairing.
struct AucBootstrap {
    std::vector<double> auc;
    std::vector<double> se;
    /// difference_se[a][b] = SE of auc[a] - auc[b].
    std::vector<std::vector<double>> difference_se;
};
AucBootstrap bootstrap_auc(std::span<const TrialStatistics> stats, int replicates, std::uint64_t seed);

/// Per-trial statistics for the requested algorithms.
std::vector<TrialStatistics> simulate_statistics(const ExperimentConfig& config, std::span<const Algorithm> algorithms);

/// Threshold(s) for an algorithm under the config's policy.
std::vector<double> policy_thresholds(const ExperimentConfig& config, const TrialStatistics& stats);

RocResult run_roc(const ExperimentConfig& config);

/// Energy detector ignoring sparsity; throws std::logic_error when the
/// statistic deviates from sum ||y_j||^2 beyond 1e-9 relative.
RocResult run_ml_baseline(const ExperimentConfig& config);

struct KnownVsSompResult {
    RocCurve known;  // averaged over repetitions of random true-index subsets
    RocCurve somp;
    double known_auc = 0.0;
    double somp_auc = 0.0;
    /// Largest pd gap (known - somp) at matched quantile levels.
    double max_gap = 0.0;
};

KnownVsSompResult run_known_support_comparison(const ExperimentConfig& config);

struct KnownSupportCalibration {
    double threshold = 0.0;
    double pf = 0.0;
    double pd = 0.0;
    /// Trial average of pd_theoretical with the exact per-trial noncentrality.
    double pd_theory = 0.0;
    int trials = 0;
};

/// Known-support detector with T0 true indices drawn uniformly from the
/// support, run at threshold_exact(alpha) under both hypotheses.
KnownSupportCalibration known_support_calibration(const ExperimentConfig& config, int T0, double alpha);
/// Same, for several subset sizes evaluated on shared trial draws.
std::vector<KnownSupportCalibration> known_support_calibration(const ExperimentConfig& config,
                                                               std::span<const int> subset_sizes, double alpha);

/// Empirical Pd of the known-support detector with T0 true indices drawn
/// uniformly from the support, at threshold_exact(alpha).
double empirical_known_support_pd(const ExperimentConfig& config, int T0, double alpha);

struct MinFractionRow {
    double tau_d = 0.0;
    double alpha = 0.0;
    double c_r = 0.0;
    int k = 0;
    int L = 0;
    PlannerResult plan;
    std::optional<double> pd_empirical;
};

/// Planner inputs for a config with expected-energy SNRs
/// gamma_j = k E[c^2] / sigma^2.
TheoryInputs theory_inputs(const ExperimentConfig& config, double alpha, double tau_d);

std::vector<MinFractionRow> run_min_fraction_experiments(const ExperimentConfig& config);

struct FTraceRow {
    double c_r = 0.0;
    double t = 0.0;
    double f = 0.0;
    double f_prime = 0.0;
    double pd_approx = 0.0;
};

std::vector<FTraceRow> run_f_trace(const ExperimentConfig& config, int points = 64);

struct P1P2Row {
    double c_r = 0.0;
    P1P2Estimate estimate;
};

std::vector<P1P2Row> run_p1_p2(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// CSV output

/// Git-style blob hash (SHA-1 of "blob <len>\0<body>"), lowercase hex.
std::string content_hash(std::string_view body);

std::string roc_csv(const ExperimentConfig& config, std::string_view command, std::span<const RocCurve> curves);
std::string messages_csv(const ExperimentConfig& config, std::span<const RocCurve> curves);
std::string minfrac_csv(const ExperimentConfig& config, std::span<const MinFractionRow> rows);
std::string ftrace_csv(const ExperimentConfig& config, std::span<const FTraceRow> rows);
std::string p1p2_csv(const ExperimentConfig& config, std::span<const P1P2Row> rows);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace sparsedet
