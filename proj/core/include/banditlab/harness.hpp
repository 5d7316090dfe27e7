#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "banditlab/config.hpp"
#include "banditlab/metrics.hpp"

namespace banditlab {

struct ArmResult;

// Subcommand exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSchema = 3;
inline constexpr int kExitRuntime = 4;

// Name of the marker file cmd_simulate leaves behind on a mid-run failure.
inline constexpr const char* kPartialMarker = "_PARTIAL";

// report.json payload: one entry per generation, recomputable from the logs.
std::string arm_report_string(std::span<const GenerationReport> reports);
void write_arm_report(const std::filesystem::path& path,
                      std::span<const GenerationReport> reports);

// comparison.json: per arm per generation {mean_reward, exploration_rate,
// effective_exploration, positive_rate, gini, ci75, ci95}. exploration_rate
// is the policy's nominal rate and null where none exists (SquareCB, and
// the uniform-logging generation 0).
std::string comparison_report_string(const ExperimentConfig& cfg,
                                     std::span<const ArmResult> results);
void write_comparison_report(const std::filesystem::path& path,
                             const ExperimentConfig& cfg,
                             std::span<const ArmResult> results);

// CLI subcommand bodies. Each returns an exit code and reports errors on
// `err`; the binary in tools/ is a thin flag-parsing wrapper around these.
int cmd_simulate(const std::filesystem::path& config_path, int workers,
                 std::ostream& out, std::ostream& err);

int cmd_tune_gamma(const std::filesystem::path& config_path,
                   const std::vector<double>& gammas, std::ostream& out,
                   std::ostream& err);

int cmd_eval_offline(const std::filesystem::path& logs_path,
                     const std::filesystem::path& oracle_path,
                     const std::string& policy_spec,
                     const std::string& estimator, std::optional<double> clip,
                     std::ostream& out, std::ostream& err);

int cmd_report(const std::filesystem::path& experiment_dir, std::ostream& out,
               std::ostream& err);

}  // namespace banditlab
