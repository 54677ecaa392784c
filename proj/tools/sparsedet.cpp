#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sparsedet/harness.hpp"
#include "sparsedet/validate.hpp"

namespace fs = std::filesystem;
using namespace sparsedet;

namespace {

constexpr int kConfigErrorExit = 2;
constexpr int kValidateFailureExit = 3;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required)
{
    auto* cfg = cmd->add_option("--config", opts.config_path, "JSON experiment config");
    if (config_required) {
        cfg->required();
    }
    cmd->add_option("--seed", opts.seed, "master seed override");
    cmd->add_option("--trials", opts.trials, "Monte Carlo trial count override");
    cmd->add_option("--out", opts.out_dir, "output directory");
}

ExperimentConfig resolve(const CommonOptions& opts, const ExperimentConfig& fallback)
{
    ExperimentConfig c = opts.config_path.empty() ? fallback : load_config(opts.config_path);
    if (opts.seed) {
        c.seed = *opts.seed;
    }
    if (opts.trials) {
        if (*opts.trials < 1) {
            throw ConfigError("trials", "need trials >= 1");
        }
        c.trials = *opts.trials;
    }
    return c;
}

void emit(const fs::path& dir, const std::string& name, const std::string& text)
{
    const fs::path path = dir / name;
    write_text(path, text);
    std::cout << "wrote " << path.string() << "\n";
}

int cmd_roc(const CommonOptions& opts)
{
    const ExperimentConfig c = resolve(opts, {});
    const RocResult result = run_roc(c);
    emit(opts.out_dir, "roc.csv", roc_csv(c, "roc", result.curves));
    emit(opts.out_dir, "messages.csv", messages_csv(c, result.curves));
    if (c.threshold_policy == ThresholdPolicy::Sweep) {
        for (const auto& stats : result.statistics) {
            std::printf("%-20s auc=%.4f\n", std::string(to_string(stats.algorithm)).c_str(),
                        sweep_auc(stats.h0, stats.h1));
        }
    }
    return 0;
}

int cmd_minfrac(const CommonOptions& opts)
{
    const ExperimentConfig c = resolve(opts, {});
    const auto rows = run_min_fraction_experiments(c);
    emit(opts.out_dir, "minfrac.csv", minfrac_csv(c, rows));
    const auto trace = run_f_trace(c);
    emit(opts.out_dir, "ftrace.csv", ftrace_csv(c, trace));
    return 0;
}

int cmd_p1p2(const CommonOptions& opts)
{
    const ExperimentConfig c = resolve(opts, {});
    const auto rows = run_p1_p2(c);
    emit(opts.out_dir, "p1p2.csv", p1p2_csv(c, rows));
    return 0;
}

int cmd_known_vs_somp(const CommonOptions& opts)
{
    const ExperimentConfig c = resolve(opts, {});
    const auto result = run_known_support_comparison(c);
    const RocCurve curves[] = {result.known, result.somp};
    emit(opts.out_dir, "known_vs_somp.csv", roc_csv(c, "known-vs-somp", curves));
    std::printf("known_support auc=%.4f somp auc=%.4f max_gap=%.4f\n", result.known_auc, result.somp_auc,
                result.max_gap);
    return 0;
}

int cmd_validate(const CommonOptions& opts)
{
    const ExperimentConfig c = resolve(opts, validation_config());
    bool all = true;
    for (const auto& check : run_validation_suite(c)) {
        std::printf("%s  %-42s %s\n", check.passed ? "PASS" : "FAIL", check.name.c_str(), check.detail.c_str());
        all = all && check.passed;
    }
    return all ? 0 : kValidateFailureExit;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Joint-sparse multi-node detection simulator"};
    app.require_subcommand(1);

    CommonOptions roc_opts;
    CommonOptions minfrac_opts;
    CommonOptions p1p2_opts;
    CommonOptions known_opts;
    CommonOptions validate_opts;
    auto* roc = app.add_subcommand("roc", "ROC curves for the selected detectors");
    auto* minfrac = app.add_subcommand("minfrac", "minimum known-support fraction tables");
    auto* p1p2 = app.add_subcommand("p1p2", "first-pick success probabilities over c_r");
    auto* known = app.add_subcommand("known-vs-somp", "known partial support against S-OMP estimates");
    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    add_common(roc, roc_opts, true);
    add_common(minfrac, minfrac_opts, true);
    add_common(p1p2, p1p2_opts, true);
    add_common(known, known_opts, true);
    add_common(validate, validate_opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (roc->parsed()) return cmd_roc(roc_opts);
        if (minfrac->parsed()) return cmd_minfrac(minfrac_opts);
        if (p1p2->parsed()) return cmd_p1p2(p1p2_opts);
        if (known->parsed()) return cmd_known_vs_somp(known_opts);
        if (validate->parsed()) return cmd_validate(validate_opts);
    }
    catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigErrorExit;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
