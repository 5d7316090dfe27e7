#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "banditlab/types.hpp"

namespace banditlab {

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// Per-generation diagnostics, all recomputable from the persisted log.
// mean_reward is stored as the exploration/exploitation decomposition
//   w * explore_mean + (1 - w) * exploit_mean,  w = effective_exploration,
// so the decomposition identity holds bit-exactly on every log.
struct GenerationReport {
    std::int64_t rounds = 0;
    double mean_reward = 0.0;
    double exploration_round_mean_reward = 0.0;   // 0 when no such rounds
    double exploitation_round_mean_reward = 0.0;  // 0 when no such rounds
    double effective_exploration = 0.0;
    std::map<std::int64_t, double> exploration_by_size;
    double positive_rate = 0.0;
    double gini_weighted = 0.0;
    ConfidenceInterval ci75;
    ConfidenceInterval ci95;
};

struct LorenzCurve {
    // (cumulative population share, cumulative action share), starting at
    // (0,0), ending at (1,1), weakly below the diagonal.
    std::vector<std::pair<double, double>> points;
};

// Fraction of records with was_greedy == false. Throws on empty logs.
double effective_exploration_rate(std::span<const LogRecord> logs);

// Effective exploration within each |eligible| bucket; empty buckets are
// simply absent.
std::map<std::int64_t, double> exploration_by_action_size(
    std::span<const LogRecord> logs);

double positive_rate(std::span<const LogRecord> logs);

LorenzCurve lorenz_curve(std::span<const std::int64_t> action_counts);

// 1 - 2 * (trapezoidal area under the Lorenz curve); 0 for equal counts.
double gini(std::span<const std::int64_t> action_counts);

struct TrafficGroup {
    std::int64_t traffic = 0;
    std::vector<std::int64_t> action_counts;
};

double traffic_weighted_gini(std::span<const TrafficGroup> groups);

// Groups log records by their eligible-set signature (the sorted action
// ids); per group, counts how often each eligible action was chosen.
// Ordered by signature so downstream reductions are deterministic.
std::map<std::vector<ActionId>, TrafficGroup> group_by_eligible_signature(
    std::span<const LogRecord> logs);

// Wilson score interval; level must be 0.75 or 0.95
// (z = 1.150349 / 1.959964).
ConfidenceInterval wilson_interval(std::int64_t successes, std::int64_t n,
                                   double level);

struct UpliftResult {
    double percent = 0.0;  // (mean_v - mean_b) / mean_b * 100
    ConfidenceInterval ci95;
    bool excludes_zero = false;
};

UpliftResult uplift(std::span<const LogRecord> variant,
                    std::span<const LogRecord> baseline);

// Uplift on binary-outcome summaries directly (used for segment-level
// comparisons such as exploration-round reward).
UpliftResult uplift_from_counts(std::int64_t variant_successes,
                                std::int64_t variant_n,
                                std::int64_t baseline_successes,
                                std::int64_t baseline_n);

GenerationReport make_generation_report(std::span<const LogRecord> logs);

}  // namespace banditlab
