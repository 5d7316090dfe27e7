#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "banditlab/config.hpp"
#include "banditlab/environment.hpp"
#include "banditlab/metrics.hpp"
#include "banditlab/oracle.hpp"
#include "banditlab/policy.hpp"
#include "banditlab/types.hpp"

namespace banditlab {

// Generation 0: uniform-random logging over the eligible set, propensity
// 1/|A_t|, risk stats updated as rounds are played.
std::vector<LogRecord> bootstrap_gen0(const Environment& env, std::int64_t n,
                                      RngStream& rng, RiskStats& stats);

struct GenerationRun {
    std::vector<LogRecord> records;
    GenerationReport report;
};

// One batch window with a frozen oracle: context -> eligible set -> per-
// action predictions -> policy distribution -> sample -> Bernoulli reward.
GenerationRun run_generation(const PolicyConfig& policy, const Oracle& oracle,
                             const Environment& env, RiskStats& stats,
                             std::int64_t rounds, RngStream& rng,
                             std::int32_t generation_index);

// Records feeding the retrain before generation `next_generation`;
// generations are indexed 0 (bootstrap) .. G.
std::vector<const LogRecord*> training_window_view(
    const std::vector<std::vector<LogRecord>>& generations,
    TrainingWindow window, std::int32_t next_generation);

Dataset build_training_dataset(std::span<const LogRecord* const> records,
                               const FeatureSchema& schema);

// Dispatches on cfg.kind.
Oracle train_oracle(const Dataset& data, const TrainConfig& cfg);

struct ArmResult {
    std::string label;
    std::int32_t arm_index = 0;
    std::filesystem::path dir;
    std::vector<std::filesystem::path> log_paths;  // index = generation
    std::vector<GenerationReport> reports;         // index = generation
};

// Runs every arm against the shared environment and gen-0 bootstrap,
// persists per-arm artifacts (genK.log, oracle_genK.json, report.json) and
// the cross-arm comparison.json under cfg.output_dir. Arms own independent
// rng streams and risk-stat copies, so results are byte-identical for any
// worker count.
std::vector<ArmResult> run_experiment(const ExperimentConfig& cfg,
                                      int workers = 1);

// Bisection on log(gamma) until SquareCB's measured effective exploration
// over probe_rounds matches target_exploration within tolerance. Probes
// replay the same seeded stream, so the search is deterministic.
double match_squarecb_gamma(const Environment& env, const Oracle& oracle,
                            const RiskStats& stats, double target_exploration,
                            std::int64_t probe_rounds, std::uint64_t seed,
                            double tolerance);

}  // namespace banditlab
