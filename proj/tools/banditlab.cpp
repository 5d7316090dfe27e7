// banditlab CLI: simulate / tune-gamma / eval-offline / report.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "banditlab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"contextual-bandit experiment harness"};
    app.require_subcommand(1);

    std::string config_path;
    int workers = 1;
    auto* simulate = app.add_subcommand(
        "simulate", "run the configured experiment arms");
    simulate->add_option("--config", config_path, "experiment config file")
        ->required();
    simulate->add_option("--workers", workers, "arm-level parallelism")
        ->default_val(1);

    std::string tune_config;
    std::vector<double> gammas;
    auto* tune = app.add_subcommand(
        "tune-gamma", "sweep SquareCB learning rates against one generation");
    tune->add_option("--config", tune_config, "experiment config file")
        ->required();
    tune->add_option("--gammas", gammas, "comma-separated gamma values")
        ->required()
        ->delimiter(',');

    std::string logs_path;
    std::string oracle_path;
    std::string policy_spec;
    std::string estimator = "ips";
    double clip_value = 0.0;
    auto* eval = app.add_subcommand(
        "eval-offline", "counterfactual policy value from logged feedback");
    eval->add_option("--logs", logs_path, "log file (core format)")
        ->required();
    eval->add_option("--oracle", oracle_path, "serialized oracle file")
        ->required();
    eval->add_option("--policy", policy_spec,
                     "greedy | epsilon:<eps> | squarecb:<gamma>")
        ->required();
    eval->add_option("--estimator", estimator, "ips or snips")
        ->default_val("ips");
    auto* clip_opt =
        eval->add_option("--clip", clip_value, "importance weight clip M");

    std::string report_dir;
    auto* report = app.add_subcommand(
        "report", "render and verify a completed experiment directory");
    report->add_option("dir", report_dir, "experiment output directory")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : banditlab::kExitConfig;
    }

    if (simulate->parsed()) {
        return banditlab::cmd_simulate(config_path, workers, std::cout,
                                       std::cerr);
    }
    if (tune->parsed()) {
        return banditlab::cmd_tune_gamma(tune_config, gammas, std::cout,
                                         std::cerr);
    }
    if (eval->parsed()) {
        std::optional<double> clip;
        if (clip_opt->count() > 0) {
            clip = clip_value;
        }
        return banditlab::cmd_eval_offline(logs_path, oracle_path, policy_spec,
                                           estimator, clip, std::cout,
                                           std::cerr);
    }
    if (report->parsed()) {
        return banditlab::cmd_report(report_dir, std::cout, std::cerr);
    }
    return banditlab::kExitConfig;
}
