#include "sparsedet/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace sparsedet {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

const std::set<std::string> kKnownKeys = {
    "N", "k", "L", "M", "c_r", "T0", "sigma2", "snr_db", "coeff_range", "trials", "seed", "algorithms",
    "threshold_policy", "alpha", "redraw", "threads", "repetitions", "bootstrap", "tau_d_grid", "alpha_grid",
    "c_r_grid", "empirical_pd",
};

int read_int(const json& j, const std::string& key, int fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer()) {
        throw ConfigError(key, "expected an integer");
    }
    const auto value = v.get<long long>();
    if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
        throw ConfigError(key, "integer out of range");
    }
    return static_cast<int>(value);
}

double read_double(const json& j, const std::string& key, double fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
        throw ConfigError(key, "expected a number");
    }
    const double value = v.get<double>();
    if (!std::isfinite(value)) {
        throw ConfigError(key, "must be finite");
    }
    return value;
}

bool read_bool(const json& j, const std::string& key, const std::string& path, bool fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_boolean()) {
        throw ConfigError(path, "expected true or false");
    }
    return j.at(key).get<bool>();
}

std::vector<double> read_grid(const json& j, const std::string& key)
{
    std::vector<double> out;
    if (!j.contains(key)) {
        return out;
    }
    const json& v = j.at(key);
    if (!v.is_array()) {
        throw ConfigError(key, "expected an array of numbers");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string path = key + "[" + std::to_string(i) + "]";
        if (!v[i].is_number()) {
            throw ConfigError(path, "expected a number");
        }
        const double value = v[i].get<double>();
        if (!(value > 0.0 && value < 1.0)) {
            throw ConfigError(path, "must lie in (0, 1)");
        }
        out.push_back(value);
    }
    return out;
}

ThresholdPolicy policy_from_string(const std::string& name)
{
    if (name == "sweep") return ThresholdPolicy::Sweep;
    if (name == "exact_alpha") return ThresholdPolicy::ExactAlpha;
    if (name == "sankaran_alpha") return ThresholdPolicy::SankaranAlpha;
    throw ConfigError("threshold_policy", "unknown policy '" + name + "'");
}

std::string_view policy_name(ThresholdPolicy policy)
{
    switch (policy) {
    case ThresholdPolicy::Sweep:
        return "sweep";
    case ThresholdPolicy::ExactAlpha:
        return "exact_alpha";
    case ThresholdPolicy::SankaranAlpha:
        return "sankaran_alpha";
    }
    return "sweep";
}

void check_config(const ExperimentConfig& c)
{
    const Scenario& s = c.scenario;
    if (s.N < 2) throw ConfigError("N", "need N >= 2");
    if (s.k < 1 || s.k >= s.N) throw ConfigError("k", "need 1 <= k < N");
    if (s.L < 1) throw ConfigError("L", "need L >= 1");
    if (s.M < 1 || s.M >= s.N) throw ConfigError("M", "need 1 <= M < N (c_r in (0, 1))");
    if (c.T0 < 1) throw ConfigError("T0", "need T0 >= 1");
    if (c.T0 > s.k) throw ConfigError("T0", "need T0 <= k");
    if (c.T0 > s.M) throw ConfigError("T0", "need T0 <= M");
    if (!(s.sigma2 > 0.0)) throw ConfigError("sigma2", "need sigma2 > 0");
    if (!(s.range.lo > 0.0) || s.range.hi < s.range.lo) throw ConfigError("coeff_range", "need 0 < a <= b");
    if (c.trials < 1) throw ConfigError("trials", "need trials >= 1");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha", "need alpha in (0, 1)");
    if (c.algorithms.empty()) throw ConfigError("algorithms", "need at least one algorithm");
    if (c.threads < 0) throw ConfigError("threads", "need threads >= 0");
    if (c.repetitions < 1) throw ConfigError("repetitions", "need repetitions >= 1");
    if (c.bootstrap < 0) throw ConfigError("bootstrap", "need bootstrap >= 0");
    for (std::size_t i = 0; i < c.c_r_grid.size(); ++i) {
        const int m = rows_for_compression(c.c_r_grid[i], s.N);
        if (m < std::max(1, c.T0) || m >= s.N) {
            throw ConfigError("c_r_grid[" + std::to_string(i) + "]", "gives M outside [max(1, T0), N)");
        }
    }
}

// ---------------------------------------------------------------------------
// Trial simulation

enum StreamTag : std::uint64_t {
    kSupportTag = 1,
    kSignalTag = 2,
    kSensingTag = 3,
    kNoiseH0Tag = 4,
    kNoiseH1Tag = 5,
    kSubsetTag = 6,
};

constexpr std::uint64_t kFrozen = ~std::uint64_t{0};
constexpr std::uint64_t kBootstrapTag = 0xb0075;

Rng component_stream(const ExperimentConfig& c, int trial, std::uint64_t tag, bool redraw)
{
    return Rng::stream(c.seed, {redraw ? static_cast<std::uint64_t>(trial) : kFrozen, tag});
}

struct TrialDraw {
    SignalEnsemble signals;
    SensingEnsemble sensing;
    ObservationSet h0;
    ObservationSet h1;
};

TrialDraw draw_trial(const ExperimentConfig& c, int trial)
{
    const Scenario& s = c.scenario;
    auto support_rng = component_stream(c, trial, kSupportTag, c.redraw.support);
    auto signal_rng = component_stream(c, trial, kSignalTag, c.redraw.signals);
    auto sensing_rng = component_stream(c, trial, kSensingTag, c.redraw.sensing);
    auto h0_rng = component_stream(c, trial, kNoiseH0Tag, true);
    auto h1_rng = component_stream(c, trial, kNoiseH1Tag, true);

    TrialDraw d;
    const auto support = draw_support(s.N, s.k, support_rng);
    d.signals = draw_signals(support, s.L, s.range, signal_rng);
    d.sensing = draw_sensing(s.M, s.N, s.L, sensing_rng);
    d.h0 = observe(d.signals, d.sensing, Hypothesis::H0, s.sigma2, h0_rng);
    d.h1 = observe(d.signals, d.sensing, Hypothesis::H1, s.sigma2, h1_rng);
    return d;
}

// T0 entries of the support chosen uniformly without replacement.
SupportSet random_subset(const SupportSet& support, int T0, Rng& rng)
{
    std::vector<int> pool = support.indices();
    const auto n = static_cast<std::uint64_t>(pool.size());
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(T0); ++i) {
        const std::uint64_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(T0));
    std::sort(pool.begin(), pool.end());
    return SupportSet(std::move(pool), support.ambient_dim());
}

int resolve_threads(int requested, int trials)
{
    int workers = requested;
    if (workers == 0) {
        workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    return std::max(1, std::min(workers, trials));
}

// Runs body(trial) for every trial. Each trial writes only to its own slots,
// so the result does not depend on the worker count.
template <class Body>
void for_each_trial(int trials, int threads, Body&& body)
{
    const int workers = resolve_threads(threads, trials);
    if (workers == 1) {
        for (int trial = 0; trial < trials; ++trial) {
            body(trial);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (int trial = next++; trial < trials; trial = next++) {
                    body(trial);
                }
            }
            catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next = trials;
            }
        });
    }
    for (auto& worker : pool) {
        worker.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

double total_energy(const ObservationSet& obs)
{
    double sum = 0.0;
    for (const auto& y : obs.measurements) {
        sum += y.squaredNorm();
    }
    return sum;
}

struct Simulation {
    std::vector<TrialStatistics> statistics;
    double ml_identity_error = 0.0;
};

Simulation simulate(const ExperimentConfig& c, std::span<const Algorithm> algorithms)
{
    check_config(c);
    const int n = c.trials;
    const int T0 = c.T0;
    const int k = c.scenario.k;

    Simulation sim;
    for (const Algorithm a : algorithms) {
        TrialStatistics stats;
        stats.algorithm = a;
        stats.h0.assign(static_cast<std::size_t>(n), 0.0);
        stats.h1.assign(static_cast<std::size_t>(n), 0.0);
        stats.messages_per_node = messages_per_node(a, c.scenario.M, T0);
        sim.statistics.push_back(std::move(stats));
    }
    std::vector<double> ml_error(static_cast<std::size_t>(n), 0.0);

    for_each_trial(n, c.threads, [&](int trial) {
        const TrialDraw d = draw_trial(c, trial);
        auto subset_rng = Rng::stream(c.seed, {static_cast<std::uint64_t>(trial), kSubsetTag});
        const SupportSet subset = random_subset(d.signals.true_support, T0, subset_rng);

        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            auto run = [&](const ObservationSet& obs) -> double {
                switch (algorithms[a]) {
                case Algorithm::KnownSupport:
                    return known_support_detect(obs, d.sensing, subset, 0.0).statistic;
                case Algorithm::Somp:
                    return somp_detect(obs, d.sensing, T0, 0.0).statistic;
                case Algorithm::Dist1:
                    return dist1_detect(obs, d.sensing, T0, 0.0).statistic;
                case Algorithm::Dist2:
                    return dist2_detect(obs, d.sensing, T0, k, 0.0).statistic;
                case Algorithm::MlIgnoreSparsity: {
                    const double value = ml_detect(obs, d.sensing, 0.0).statistic;
                    const double energy = total_energy(obs);
                    const double err = std::abs(value - energy) / std::max(energy, 1e-300);
                    ml_error[static_cast<std::size_t>(trial)] =
                        std::max(ml_error[static_cast<std::size_t>(trial)], err);
                    return value;
                }
                }
                throw std::logic_error("unknown algorithm");
            };
            sim.statistics[a].h0[static_cast<std::size_t>(trial)] = run(d.h0);
            sim.statistics[a].h1[static_cast<std::size_t>(trial)] = run(d.h1);
        }
    });

    sim.ml_identity_error = *std::max_element(ml_error.begin(), ml_error.end());
    return sim;
}

// Linearly interpolated empirical quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double tail_fraction(const std::vector<double>& sorted, double threshold)
{
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), threshold);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

std::vector<double> sorted_copy(std::span<const double> values)
{
    std::vector<double> out(values.begin(), values.end());
    std::sort(out.begin(), out.end());
    return out;
}

double sample_sd(const std::vector<double>& values)
{
    if (values.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

int count_violations(const std::vector<RocPoint>& points, int n0, int n1)
{
    int bad = 0;
    for (const auto& p : points) {
        const double err = std::sqrt(p.pf * (1.0 - p.pf) / n0 + p.pd * (1.0 - p.pd) / n1);
        bad += p.pd + 3.0 * err < p.pf;
    }
    return bad;
}

// ---------------------------------------------------------------------------
// CSV formatting

std::string num(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::string header_block(const ExperimentConfig& c, std::string_view command,
                         const std::vector<std::string>& extra, std::string_view body)
{
    json cfg = config_to_json(c);
    cfg.erase("threads");  // worker count never changes results
    std::string out;
    out += "# sparsedet ";
    out += command;
    out += "\n# config: " + cfg.dump() + "\n";
    out += "# seed: " + std::to_string(c.seed) + "\n";
    for (const auto& line : extra) {
        out += "# " + line + "\n";
    }
    out += "# content_sha1: " + content_hash(body) + "\n";
    return out;
}

std::string per_algorithm_line(std::string_view label, std::span<const RocCurve> curves, bool messages)
{
    std::string line(label);
    line += ":";
    for (const auto& curve : curves) {
        line += " ";
        line += to_string(curve.algorithm);
        line += "=" + std::to_string(messages ? curve.messages_per_node : curve.validity_violations);
    }
    return line;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::with_compression(double compression_ratio) const
{
    ExperimentConfig out = *this;
    if (!(compression_ratio > 0.0 && compression_ratio < 1.0)) {
        throw ConfigError("c_r", "need c_r in (0, 1)");
    }
    out.c_r = compression_ratio;
    out.scenario.M = rows_for_compression(compression_ratio, scenario.N);
    if (snr_db) {
        out.scenario.sigma2 = noise_variance_for_snr_db(*snr_db, scenario.k, scenario.N, scenario.range);
    }
    check_config(out);
    return out;
}

int rows_for_compression(double c_r, int N)
{
    return static_cast<int>(std::lround(c_r * N));
}

ExperimentConfig config_from_json(const json& j)
{
    if (!j.is_object()) {
        throw ConfigError("<root>", "expected an object");
    }
    for (const auto& item : j.items()) {
        if (!kKnownKeys.count(item.key())) {
            throw ConfigError(item.key(), "unknown field");
        }
    }

    ExperimentConfig c;
    Scenario& s = c.scenario;
    s.N = read_int(j, "N", s.N);
    s.k = read_int(j, "k", s.k);
    s.L = read_int(j, "L", s.L);
    c.T0 = read_int(j, "T0", c.T0);
    c.trials = read_int(j, "trials", c.trials);
    c.threads = read_int(j, "threads", c.threads);
    c.repetitions = read_int(j, "repetitions", c.repetitions);
    c.bootstrap = read_int(j, "bootstrap", c.bootstrap);
    c.alpha = read_double(j, "alpha", c.alpha);
    c.empirical_pd = read_bool(j, "empirical_pd", "empirical_pd", c.empirical_pd);

    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_unsigned()) {
            throw ConfigError("seed", "expected a non-negative integer");
        }
        c.seed = v.get<std::uint64_t>();
    }

    if (j.contains("coeff_range")) {
        const json& v = j.at("coeff_range");
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ConfigError("coeff_range", "expected [a, b]");
        }
        s.range = {v[0].get<double>(), v[1].get<double>()};
    }

    if (j.contains("c_r") && j.contains("M")) {
        c.c_r = read_double(j, "c_r", c.c_r);
        s.M = read_int(j, "M", s.M);
        if (rows_for_compression(c.c_r, s.N) != s.M) {
            throw ConfigError("M", "disagrees with round(c_r * N)");
        }
    }
    else if (j.contains("M")) {
        s.M = read_int(j, "M", s.M);
        c.c_r = static_cast<double>(s.M) / s.N;
    }
    else {
        c.c_r = read_double(j, "c_r", c.c_r);
        if (!(c.c_r > 0.0 && c.c_r < 1.0)) {
            throw ConfigError("c_r", "need c_r in (0, 1)");
        }
        s.M = rows_for_compression(c.c_r, s.N);
    }
    if (!(c.c_r > 0.0 && c.c_r < 1.0)) {
        throw ConfigError("c_r", "need c_r in (0, 1)");
    }

    if (j.contains("snr_db") && j.contains("sigma2")) {
        throw ConfigError("snr_db", "give either sigma2 or snr_db, not both");
    }
    if (j.contains("snr_db")) {
        c.snr_db = read_double(j, "snr_db", 0.0);
        if (s.k >= 1 && s.N > s.k && s.range.lo > 0.0 && s.range.hi >= s.range.lo) {
            s.sigma2 = noise_variance_for_snr_db(*c.snr_db, s.k, s.N, s.range);
        }
    }
    else {
        s.sigma2 = read_double(j, "sigma2", s.sigma2);
    }

    if (j.contains("algorithms")) {
        const json& v = j.at("algorithms");
        if (!v.is_array()) {
            throw ConfigError("algorithms", "expected an array of names");
        }
        c.algorithms.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string path = "algorithms[" + std::to_string(i) + "]";
            if (!v[i].is_string()) {
                throw ConfigError(path, "expected a name");
            }
            try {
                c.algorithms.push_back(algorithm_from_string(v[i].get<std::string>()));
            }
            catch (const std::invalid_argument&) {
                throw ConfigError(path, "unknown algorithm '" + v[i].get<std::string>() + "'");
            }
        }
    }

    if (j.contains("threshold_policy")) {
        if (!j.at("threshold_policy").is_string()) {
            throw ConfigError("threshold_policy", "expected a name");
        }
        c.threshold_policy = policy_from_string(j.at("threshold_policy").get<std::string>());
    }

    if (j.contains("redraw")) {
        const json& v = j.at("redraw");
        if (!v.is_object()) {
            throw ConfigError("redraw", "expected an object");
        }
        for (const auto& item : v.items()) {
            if (item.key() != "support" && item.key() != "signals" && item.key() != "sensing") {
                throw ConfigError("redraw." + item.key(), "unknown field");
            }
        }
        c.redraw.support = read_bool(v, "support", "redraw.support", c.redraw.support);
        c.redraw.signals = read_bool(v, "signals", "redraw.signals", c.redraw.signals);
        c.redraw.sensing = read_bool(v, "sensing", "redraw.sensing", c.redraw.sensing);
    }

    c.tau_d_grid = read_grid(j, "tau_d_grid");
    c.alpha_grid = read_grid(j, "alpha_grid");
    c.c_r_grid = read_grid(j, "c_r_grid");

    check_config(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("<file>", "cannot open " + path.string());
    }
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    }
    catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("parse error: ") + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c)
{
    json j;
    j["N"] = c.scenario.N;
    j["k"] = c.scenario.k;
    j["L"] = c.scenario.L;
    j["M"] = c.scenario.M;
    j["c_r"] = c.c_r;
    j["T0"] = c.T0;
    if (c.snr_db) {
        j["snr_db"] = *c.snr_db;
    }
    else {
        j["sigma2"] = c.scenario.sigma2;
    }
    j["coeff_range"] = {c.scenario.range.lo, c.scenario.range.hi};
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    json algos = json::array();
    for (const Algorithm a : c.algorithms) {
        algos.push_back(std::string(to_string(a)));
    }
    j["algorithms"] = algos;
    j["threshold_policy"] = std::string(policy_name(c.threshold_policy));
    j["alpha"] = c.alpha;
    j["redraw"] = {{"support", c.redraw.support}, {"signals", c.redraw.signals}, {"sensing", c.redraw.sensing}};
    j["threads"] = c.threads;
    j["repetitions"] = c.repetitions;
    j["bootstrap"] = c.bootstrap;
    j["tau_d_grid"] = c.tau_d_grid;
    j["alpha_grid"] = c.alpha_grid;
    j["c_r_grid"] = c.c_r_grid;
    j["empirical_pd"] = c.empirical_pd;
    return j;
}

// ---------------------------------------------------------------------------
// ROC

std::vector<double> quantile_thresholds(std::span<const double> h0, int levels)
{
    if (h0.empty()) {
        throw std::invalid_argument("quantile_thresholds: no statistics");
    }
    if (levels < 2) {
        throw std::invalid_argument("quantile_thresholds: need at least two levels");
    }
    const auto sorted = sorted_copy(h0);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
        const double value = quantile_sorted(sorted, static_cast<double>(i) / (levels - 1));
        if (out.empty() || value > out.back()) {
            out.push_back(value);
        }
    }
    return out;
}

RocCurve roc_from_statistics(const TrialStatistics& stats, std::span<const double> thresholds)
{
    if (stats.h0.empty() || stats.h1.empty()) {
        throw std::invalid_argument("roc_from_statistics: no statistics");
    }
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > thresholds[i - 1])) {
            throw std::invalid_argument("roc_from_statistics: thresholds must increase strictly");
        }
    }
    const auto h0 = sorted_copy(stats.h0);
    const auto h1 = sorted_copy(stats.h1);

    RocCurve curve;
    curve.algorithm = stats.algorithm;
    curve.messages_per_node = stats.messages_per_node;
    for (const double threshold : thresholds) {
        curve.points.push_back({threshold, tail_fraction(h0, threshold), tail_fraction(h1, threshold),
                                static_cast<int>(h1.size())});
    }
    curve.validity_violations =
        count_violations(curve.points, static_cast<int>(h0.size()), static_cast<int>(h1.size()));
    return curve;
}

double auc(std::span<const RocPoint> points)
{
    std::vector<std::pair<double, double>> xy;
    xy.reserve(points.size() + 2);
    xy.emplace_back(0.0, 0.0);
    for (const auto& p : points) {
        xy.emplace_back(p.pf, p.pd);
    }
    xy.emplace_back(1.0, 1.0);
    std::sort(xy.begin(), xy.end());
    double area = 0.0;
    for (std::size_t i = 1; i < xy.size(); ++i) {
        area += 0.5 * (xy[i].first - xy[i - 1].first) * (xy[i].second + xy[i - 1].second);
    }
    return area;
}

double sweep_auc(std::span<const double> h0, std::span<const double> h1)
{
    TrialStatistics stats;
    stats.h0.assign(h0.begin(), h0.end());
    stats.h1.assign(h1.begin(), h1.end());
    const auto thresholds = quantile_thresholds(h0);
    return auc(roc_from_statistics(stats, thresholds).points);
}

AucBootstrap bootstrap_auc(std::span<const TrialStatistics> stats, int replicates, std::uint64_t seed)
{
    if (stats.empty()) {
        throw std::invalid_argument("bootstrap_auc: no algorithms");
    }
    const std::size_t n = stats.front().h0.size();
    for (const auto& s : stats) {
        if (s.h0.size() != n || s.h1.size() != n) {
            throw std::invalid_argument("bootstrap_auc: algorithms must share the trial set");
        }
    }
    const std::size_t a_count = stats.size();
    AucBootstrap out;
    for (const auto& s : stats) {
        out.auc.push_back(sweep_auc(s.h0, s.h1));
    }

    std::vector<std::vector<double>> reps(a_count);
    std::vector<double> h0(n);
    std::vector<double> h1(n);
    std::vector<std::size_t> idx(n);
    for (int r = 0; r < replicates; ++r) {
        auto rng = Rng::stream(seed, {kBootstrapTag, static_cast<std::uint64_t>(r)});
        for (auto& i : idx) {
            i = static_cast<std::size_t>(rng.below(n));
        }
        for (std::size_t a = 0; a < a_count; ++a) {
            for (std::size_t i = 0; i < n; ++i) {
                h0[i] = stats[a].h0[idx[i]];
                h1[i] = stats[a].h1[idx[i]];
            }
            reps[a].push_back(sweep_auc(h0, h1));
        }
    }

    out.difference_se.assign(a_count, std::vector<double>(a_count, 0.0));
    for (std::size_t a = 0; a < a_count; ++a) {
        out.se.push_back(sample_sd(reps[a]));
        for (std::size_t b = 0; b < a_count; ++b) {
            std::vector<double> diff(reps[a].size());
            for (std::size_t r = 0; r < diff.size(); ++r) {
                diff[r] = reps[a][r] - reps[b][r];
            }
            out.difference_se[a][b] = sample_sd(diff);
        }
    }
    return out;
}

std::vector<TrialStatistics> simulate_statistics(const ExperimentConfig& config, std::span<const Algorithm> algorithms)
{
    return simulate(config, algorithms).statistics;
}

std::vector<double> policy_thresholds(const ExperimentConfig& config, const TrialStatistics& stats)
{
    const auto& s = config.scenario;
    // The closed-form thresholds assume T0 L degrees of freedom; for the
    // ML detector the projector has rank M.
    const int dim = stats.algorithm == Algorithm::MlIgnoreSparsity ? s.M : config.T0;
    switch (config.threshold_policy) {
    case ThresholdPolicy::Sweep:
        return quantile_thresholds(stats.h0);
    case ThresholdPolicy::ExactAlpha:
        return {threshold_exact(config.alpha, dim, s.L, s.sigma2)};
    case ThresholdPolicy::SankaranAlpha:
        return {threshold_sankaran(config.alpha, dim, s.L, s.sigma2)};
    }
    throw std::logic_error("unknown threshold policy");
}

RocResult run_roc(const ExperimentConfig& config)
{
    auto sim = simulate(config, config.algorithms);
    RocResult out;
    for (const auto& stats : sim.statistics) {
        out.curves.push_back(roc_from_statistics(stats, policy_thresholds(config, stats)));
    }
    out.statistics = std::move(sim.statistics);
    out.ml_identity_error = sim.ml_identity_error;
    return out;
}

RocResult run_ml_baseline(const ExperimentConfig& config)
{
    ExperimentConfig c = config;
    c.algorithms = {Algorithm::MlIgnoreSparsity};
    RocResult out = run_roc(c);
    if (out.ml_identity_error > 1e-9) {
        throw std::logic_error("ML statistic deviates from total energy by " + num(out.ml_identity_error));
    }
    return out;
}

KnownVsSompResult run_known_support_comparison(const ExperimentConfig& config)
{
    check_config(config);
    const int n = config.trials;
    const int reps = config.repetitions;
    const int k = config.scenario.k;
    const int T0 = config.T0;

    // Each repetition fixes which positions of the (sorted) support are known.
    std::vector<std::vector<int>> positions;
    for (int r = 0; r < reps; ++r) {
        auto rng = Rng::stream(config.seed, {kFrozen, kSubsetTag, static_cast<std::uint64_t>(r)});
        std::vector<int> all(static_cast<std::size_t>(k));
        std::iota(all.begin(), all.end(), 0);
        const auto chosen = random_subset(SupportSet(all, k), T0, rng);
        positions.push_back(chosen.indices());
    }

    std::vector<std::vector<double>> known_h0(reps, std::vector<double>(n));
    std::vector<std::vector<double>> known_h1(reps, std::vector<double>(n));
    TrialStatistics somp;
    somp.algorithm = Algorithm::Somp;
    somp.messages_per_node = messages_per_node(Algorithm::Somp, config.scenario.M, T0);
    somp.h0.assign(static_cast<std::size_t>(n), 0.0);
    somp.h1.assign(static_cast<std::size_t>(n), 0.0);

    for_each_trial(n, config.threads, [&](int trial) {
        const TrialDraw d = draw_trial(config, trial);
        const auto& support = d.signals.true_support.indices();
        for (int r = 0; r < reps; ++r) {
            std::vector<int> picked;
            for (const int p : positions[r]) {
                picked.push_back(support[static_cast<std::size_t>(p)]);
            }
            const SupportSet subset(std::move(picked), config.scenario.N);
            const auto projectors = projectors_for_support(d.sensing, subset);
            known_h0[r][trial] = statistic(projectors, d.h0);
            known_h1[r][trial] = statistic(projectors, d.h1);
        }
        somp.h0[trial] = somp_detect(d.h0, d.sensing, T0, 0.0).statistic;
        somp.h1[trial] = somp_detect(d.h1, d.sensing, T0, 0.0).statistic;
    });

    // Both arms are evaluated at the same quantile levels of their own H0
    // statistics, so points with equal index sit at (nearly) equal Pf.
    auto level_curve = [](const std::vector<double>& h0, const std::vector<double>& h1) {
        const auto s0 = sorted_copy(h0);
        const auto s1 = sorted_copy(h1);
        std::vector<RocPoint> pts;
        for (int i = 0; i < kQuantileLevels; ++i) {
            const double threshold = quantile_sorted(s0, static_cast<double>(i) / (kQuantileLevels - 1));
            pts.push_back({threshold, tail_fraction(s0, threshold), tail_fraction(s1, threshold),
                           static_cast<int>(s1.size())});
        }
        return pts;
    };

    KnownVsSompResult out;
    out.known.algorithm = Algorithm::KnownSupport;
    out.known.messages_per_node = messages_per_node(Algorithm::KnownSupport, config.scenario.M, T0);
    out.known.points.assign(kQuantileLevels, RocPoint{});
    for (int r = 0; r < reps; ++r) {
        const auto pts = level_curve(known_h0[r], known_h1[r]);
        for (int i = 0; i < kQuantileLevels; ++i) {
            out.known.points[i].threshold += pts[i].threshold / reps;
            out.known.points[i].pf += pts[i].pf / reps;
            out.known.points[i].pd += pts[i].pd / reps;
            out.known.points[i].trials += pts[i].trials;
        }
    }
    out.known.validity_violations = count_violations(out.known.points, n * reps, n * reps);

    out.somp.algorithm = Algorithm::Somp;
    out.somp.messages_per_node = somp.messages_per_node;
    out.somp.points = level_curve(somp.h0, somp.h1);
    out.somp.validity_violations = count_violations(out.somp.points, n, n);

    out.known_auc = auc(out.known.points);
    out.somp_auc = auc(out.somp.points);
    out.max_gap = -1.0;
    for (int i = 0; i < kQuantileLevels; ++i) {
        out.max_gap = std::max(out.max_gap, out.known.points[i].pd - out.somp.points[i].pd);
    }
    return out;
}

std::vector<KnownSupportCalibration> known_support_calibration(const ExperimentConfig& config,
                                                               std::span<const int> subset_sizes, double alpha)
{
    check_config(config);
    const auto& s = config.scenario;
    for (const int T0 : subset_sizes) {
        if (T0 < 1 || T0 > s.k) {
            throw std::invalid_argument("known_support_calibration: need 1 <= T0 <= k");
        }
    }
    const int n = config.trials;
    const auto sizes = static_cast<std::size_t>(subset_sizes.size());
    std::vector<double> thresholds;
    for (const int T0 : subset_sizes) {
        thresholds.push_back(threshold_exact(alpha, T0, s.L, s.sigma2));
    }
    // [size][trial]
    std::vector<std::vector<char>> false_alarm(sizes, std::vector<char>(static_cast<std::size_t>(n), 0));
    std::vector<std::vector<char>> detection(sizes, std::vector<char>(static_cast<std::size_t>(n), 0));
    std::vector<std::vector<double>> pd_theory(sizes, std::vector<double>(static_cast<std::size_t>(n), 0.0));

    for_each_trial(n, config.threads, [&](int trial) {
        const TrialDraw d = draw_trial(config, trial);
        for (std::size_t i = 0; i < sizes; ++i) {
            const int T0 = subset_sizes[i];
            auto rng = Rng::stream(config.seed, {static_cast<std::uint64_t>(trial), kSubsetTag,
                                                 static_cast<std::uint64_t>(T0)});
            const SupportSet subset = random_subset(d.signals.true_support, T0, rng);
            const auto projectors = projectors_for_support(d.sensing, subset);
            false_alarm[i][trial] = statistic(projectors, d.h0) >= thresholds[i];
            detection[i][trial] = statistic(projectors, d.h1) >= thresholds[i];
            const double lambda = noncentrality_exact(d.signals, d.sensing, subset, s.sigma2);
            pd_theory[i][trial] = pd_theoretical(thresholds[i], lambda, T0, s.L, s.sigma2).value();
        }
    });

    std::vector<KnownSupportCalibration> out(sizes);
    for (std::size_t i = 0; i < sizes; ++i) {
        out[i].threshold = thresholds[i];
        out[i].trials = n;
        out[i].pf = static_cast<double>(std::accumulate(false_alarm[i].begin(), false_alarm[i].end(), 0)) / n;
        out[i].pd = static_cast<double>(std::accumulate(detection[i].begin(), detection[i].end(), 0)) / n;
        out[i].pd_theory = std::accumulate(pd_theory[i].begin(), pd_theory[i].end(), 0.0) / n;
    }
    return out;
}

KnownSupportCalibration known_support_calibration(const ExperimentConfig& config, int T0, double alpha)
{
    const int sizes[] = {T0};
    return known_support_calibration(config, sizes, alpha).front();
}

double empirical_known_support_pd(const ExperimentConfig& config, int T0, double alpha)
{
    return known_support_calibration(config, T0, alpha).pd;
}

TheoryInputs theory_inputs(const ExperimentConfig& config, double alpha, double tau_d)
{
    const auto& s = config.scenario;
    TheoryInputs in;
    in.t = config.T0;
    in.k = s.k;
    in.L = s.L;
    in.M = s.M;
    in.N = s.N;
    in.sigma2 = s.sigma2;
    in.gamma.assign(static_cast<std::size_t>(s.L), s.k * s.range.mean_square() / s.sigma2);
    in.alpha = alpha;
    in.tau_d = tau_d;
    return in;
}

namespace {

std::vector<double> grid_or(const std::vector<double>& grid, double fallback)
{
    return grid.empty() ? std::vector<double>{fallback} : grid;
}

}  // namespace

std::vector<MinFractionRow> run_min_fraction_experiments(const ExperimentConfig& config)
{
    check_config(config);
    const auto tau_grid = grid_or(config.tau_d_grid, 0.9);
    const auto alpha_grid = grid_or(config.alpha_grid, config.alpha);
    const auto cr_grid = grid_or(config.c_r_grid, config.c_r);

    std::vector<MinFractionRow> rows;
    for (const double c_r : cr_grid) {
        const ExperimentConfig cell = config.with_compression(c_r);
        for (const double alpha : alpha_grid) {
            for (const double tau_d : tau_grid) {
                MinFractionRow row;
                row.tau_d = tau_d;
                row.alpha = alpha;
                row.c_r = c_r;
                row.k = cell.scenario.k;
                row.L = cell.scenario.L;
                row.plan = solve_min_fraction(theory_inputs(cell, alpha, tau_d));
                if (config.empirical_pd && row.plan.t_hat) {
                    row.pd_empirical = empirical_known_support_pd(cell, *row.plan.t_hat, alpha);
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::vector<FTraceRow> run_f_trace(const ExperimentConfig& config, int points)
{
    check_config(config);
    if (points < 2) {
        throw std::invalid_argument("run_f_trace: need at least two points");
    }
    std::vector<FTraceRow> rows;
    for (const double c_r : grid_or(config.c_r_grid, config.c_r)) {
        const ExperimentConfig cell = config.with_compression(c_r);
        const TheoryInputs in = theory_inputs(cell, config.alpha, 0.9);
        const double k = in.k;
        for (int i = 0; i < points; ++i) {
            const double t = i == points - 1 ? k : 1.0 + (k - 1.0) * i / (points - 1);
            rows.push_back({c_r, t, f_of_t(t, in), f_prime(t, in), pd_approx(t, in)});
        }
    }
    return rows;
}

std::vector<P1P2Row> run_p1_p2(const ExperimentConfig& config)
{
    check_config(config);
    const auto grid = grid_or(config.c_r_grid, config.c_r);
    std::vector<P1P2Row> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ExperimentConfig cell = config.with_compression(grid[i]);
        const std::uint64_t seed = Rng::stream(config.seed, {kFrozen, static_cast<std::uint64_t>(i)}).engine()();
        rows.push_back({grid[i], estimate_p1_p2(cell.scenario, cell.trials, seed)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV

std::string content_hash(std::string_view body)
{
    const std::string prefix = "blob " + std::to_string(body.size()) + '\0';
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) {
        throw std::runtime_error("content_hash: cannot allocate digest context");
    }
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                    EVP_DigestUpdate(ctx, body.data(), body.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest, &length) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) {
        throw std::runtime_error("content_hash: digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string roc_csv(const ExperimentConfig& config, std::string_view command, std::span<const RocCurve> curves)
{
    std::string body = "algo,threshold,pf,pd,trials\n";
    for (const auto& curve : curves) {
        for (const auto& p : curve.points) {
            body += std::string(to_string(curve.algorithm)) + "," + num(p.threshold) + "," + num(p.pf) + "," +
                    num(p.pd) + "," + std::to_string(p.trials) + "\n";
        }
    }
    std::vector<std::string> extra;
    if (config.threshold_policy == ThresholdPolicy::Sweep) {
        extra.push_back("threshold_protocol: sweep over " + std::to_string(kQuantileLevels) +
                        " interpolated quantiles of each algorithm's H0 statistics; decide H1 when statistic >= "
                        "threshold");
    }
    else {
        extra.push_back("threshold_protocol: " + std::string(policy_name(config.threshold_policy)) +
                        " at alpha=" + num(config.alpha) + "; decide H1 when statistic >= threshold");
    }
    extra.push_back(per_algorithm_line("messages_per_node", curves, true));
    extra.push_back(per_algorithm_line("validity_violations", curves, false));
    return header_block(config, command, extra, body) + body;
}

std::string messages_csv(const ExperimentConfig& config, std::span<const RocCurve> curves)
{
    std::string body = "algo,messages_per_node,M,T0\n";
    for (const auto& curve : curves) {
        body += std::string(to_string(curve.algorithm)) + "," + std::to_string(curve.messages_per_node) + "," +
                std::to_string(config.scenario.M) + "," + std::to_string(config.T0) + "\n";
    }
    return header_block(config, "messages", {}, body) + body;
}

std::string minfrac_csv(const ExperimentConfig& config, std::span<const MinFractionRow> rows)
{
    auto opt = [](const auto& value) { return value ? num(static_cast<double>(*value)) : std::string(); };
    std::string body = "tau_d,alpha,c_r,k,L,t_hat,t_cont,status,pd_approx,pd_empirical\n";
    for (const auto& r : rows) {
        body += num(r.tau_d) + "," + num(r.alpha) + "," + num(r.c_r) + "," + std::to_string(r.k) + "," +
                std::to_string(r.L) + "," + opt(r.plan.t_hat) + "," + opt(r.plan.t_continuous) + "," +
                std::string(to_string(r.plan.status)) + "," + opt(r.plan.pd_at_t_hat) + "," +
                opt(r.pd_empirical) + "\n";
    }
    return header_block(config, "minfrac", {"gamma: expected energy k E[c^2] / sigma2 per node"}, body) + body;
}

std::string ftrace_csv(const ExperimentConfig& config, std::span<const FTraceRow> rows)
{
    std::string body = "c_r,t,f,f_prime,pd_approx\n";
    for (const auto& r : rows) {
        body += num(r.c_r) + "," + num(r.t) + "," + num(r.f) + "," + num(r.f_prime) + "," + num(r.pd_approx) + "\n";
    }
    return header_block(config, "ftrace", {}, body) + body;
}

std::string p1p2_csv(const ExperimentConfig& config, std::span<const P1P2Row> rows)
{
    std::string body = "c_r,P1,P2,trials\n";
    for (const auto& r : rows) {
        body += num(r.c_r) + "," + num(r.estimate.p1) + "," + num(r.estimate.p2) + "," +
                std::to_string(r.estimate.trials) + "\n";
    }
    return header_block(config, "p1p2", {}, body) + body;
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

}  // namespace sparsedet
