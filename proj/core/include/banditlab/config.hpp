#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "banditlab/environment.hpp"
#include "banditlab/oracle.hpp"
#include "banditlab/policy.hpp"

namespace banditlab {

enum class TrainingWindow { LatestOnly, AllPast };

// One experiment arm: a policy, its oracle trainer, and the batch cadence.
struct GenerationSpec {
    std::string label;
    std::int64_t rounds_per_generation = 0;  // T
    std::int32_t generations = 1;            // G
    PolicyConfig policy;
    TrainConfig oracle_cfg;
    TrainingWindow window = TrainingWindow::LatestOnly;
};

struct ExperimentConfig {
    EnvConfig env;
    std::vector<GenerationSpec> arms;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::int64_t bootstrap_n = 0;

    void validate() const;  // throws ConfigError with field-level messages
};

// Config file is a single JSON document with sections env, arms[], seed,
// output_dir, bootstrap_n. Unknown keys are rejected.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Canonical re-serialization: every field explicit, fixed key order.
// parse(canonical(cfg)) == cfg.
std::string canonical_config_string(const ExperimentConfig& cfg);

// "greedy" | "epsilon:<eps>" | "squarecb:<gamma>"
PolicyConfig parse_policy_spec(std::string_view spec);
std::string policy_spec_string(const PolicyConfig& policy);

}  // namespace banditlab
