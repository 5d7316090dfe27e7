#include "banditlab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "banditlab/errors.hpp"

namespace banditlab {

namespace {

constexpr double kZ75 = 1.150349;
constexpr double kZ95 = 1.959964;

double z_for_level(double level) {
    if (level == 0.75) {
        return kZ75;
    }
    if (level == 0.95) {
        return kZ95;
    }
    throw ConfigError("confidence level must be 0.75 or 0.95");
}

void require_nonempty(std::span<const LogRecord> logs) {
    if (logs.empty()) {
        throw ValidationError("empty log slice");
    }
}

}  // namespace

double effective_exploration_rate(std::span<const LogRecord> logs) {
    require_nonempty(logs);
    std::int64_t nongreedy = 0;
    for (const LogRecord& r : logs) {
        nongreedy += r.was_greedy ? 0 : 1;
    }
    return static_cast<double>(nongreedy) / static_cast<double>(logs.size());
}

std::map<std::int64_t, double> exploration_by_action_size(
    std::span<const LogRecord> logs) {
    require_nonempty(logs);
    std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> buckets;
    for (const LogRecord& r : logs) {
        auto& [nongreedy, total] =
            buckets[static_cast<std::int64_t>(r.eligible.size())];
        nongreedy += r.was_greedy ? 0 : 1;
        total += 1;
    }
    std::map<std::int64_t, double> rates;
    for (const auto& [size, counts] : buckets) {
        rates[size] = static_cast<double>(counts.first) /
                      static_cast<double>(counts.second);
    }
    return rates;
}

double positive_rate(std::span<const LogRecord> logs) {
    require_nonempty(logs);
    std::int64_t positives = 0;
    for (const LogRecord& r : logs) {
        positives += r.reward;
    }
    return static_cast<double>(positives) / static_cast<double>(logs.size());
}

LorenzCurve lorenz_curve(std::span<const std::int64_t> action_counts) {
    if (action_counts.empty()) {
        throw ValidationError("lorenz_curve: no actions");
    }
    std::int64_t total = 0;
    for (std::int64_t c : action_counts) {
        if (c < 0) {
            throw ValidationError("lorenz_curve: negative count");
        }
        total += c;
    }
    if (total == 0) {
        throw ValidationError("lorenz_curve: all counts zero");
    }
    std::vector<std::int64_t> sorted(action_counts.begin(),
                                     action_counts.end());
    std::sort(sorted.begin(), sorted.end());

    LorenzCurve curve;
    curve.points.reserve(sorted.size() + 1);
    curve.points.emplace_back(0.0, 0.0);
    const double n = static_cast<double>(sorted.size());
    std::int64_t cumulative = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        curve.points.emplace_back(
            static_cast<double>(i + 1) / n,
            static_cast<double>(cumulative) / static_cast<double>(total));
    }
    return curve;
}

double gini(std::span<const std::int64_t> action_counts) {
    LorenzCurve curve = lorenz_curve(action_counts);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& [x0, y0] = curve.points[i - 1];
        const auto& [x1, y1] = curve.points[i];
        area += 0.5 * (y0 + y1) * (x1 - x0);
    }
    return 1.0 - 2.0 * area;
}

double traffic_weighted_gini(std::span<const TrafficGroup> groups) {
    if (groups.empty()) {
        throw ValidationError("traffic_weighted_gini: no groups");
    }
    double weighted = 0.0;
    double total_weight = 0.0;
    for (const TrafficGroup& g : groups) {
        if (g.traffic <= 0) {
            continue;
        }
        weighted += static_cast<double>(g.traffic) * gini(g.action_counts);
        total_weight += static_cast<double>(g.traffic);
    }
    if (total_weight == 0.0) {
        throw ValidationError("traffic_weighted_gini: zero total traffic");
    }
    return weighted / total_weight;
}

std::map<std::vector<ActionId>, TrafficGroup> group_by_eligible_signature(
    std::span<const LogRecord> logs) {
    std::map<std::vector<ActionId>, TrafficGroup> groups;
    for (const LogRecord& r : logs) {
        std::vector<ActionId> signature = r.eligible;
        std::sort(signature.begin(), signature.end());
        TrafficGroup& g = groups[signature];
        if (g.action_counts.empty()) {
            g.action_counts.assign(signature.size(), 0);
        }
        auto it = std::find(signature.begin(), signature.end(), r.chosen);
        g.action_counts[static_cast<std::size_t>(
            std::distance(signature.begin(), it))] += 1;
        g.traffic += 1;
    }
    return groups;
}

ConfidenceInterval wilson_interval(std::int64_t successes, std::int64_t n,
                                   double level) {
    if (n < 1 || successes < 0 || successes > n) {
        throw ValidationError("wilson_interval: invalid counts");
    }
    const double z = z_for_level(level);
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (phat + z2 / (2.0 * nn)) / denom;
    const double half =
        z / denom * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
    ConfidenceInterval ci;
    ci.lo = std::max(0.0, center - half);
    ci.hi = std::min(1.0, center + half);
    // Exact endpoints at the boundary counts.
    if (successes == 0) {
        ci.lo = 0.0;
    }
    if (successes == n) {
        ci.hi = 1.0;
    }
    return ci;
}

UpliftResult uplift_from_counts(std::int64_t variant_successes,
                                std::int64_t variant_n,
                                std::int64_t baseline_successes,
                                std::int64_t baseline_n) {
    if (variant_n < 1 || baseline_n < 1) {
        throw ValidationError("uplift: empty side");
    }
    const double mv = static_cast<double>(variant_successes) /
                      static_cast<double>(variant_n);
    const double mb = static_cast<double>(baseline_successes) /
                      static_cast<double>(baseline_n);
    if (mb == 0.0) {
        throw ValidationError("uplift: baseline mean is zero");
    }
    const double var_v =
        mv * (1.0 - mv) / static_cast<double>(variant_n);
    const double var_b =
        mb * (1.0 - mb) / static_cast<double>(baseline_n);
    const double ratio = (mv - mb) / mb;
    // Delta method on g(mv, mb) = mv/mb - 1.
    const double var_ratio =
        var_v / (mb * mb) + (mv * mv) * var_b / (mb * mb * mb * mb);
    const double half = kZ95 * std::sqrt(var_ratio);

    UpliftResult result;
    result.percent = ratio * 100.0;
    result.ci95.lo = (ratio - half) * 100.0;
    result.ci95.hi = (ratio + half) * 100.0;
    result.excludes_zero = result.ci95.lo > 0.0 || result.ci95.hi < 0.0;
    return result;
}

UpliftResult uplift(std::span<const LogRecord> variant,
                    std::span<const LogRecord> baseline) {
    require_nonempty(variant);
    require_nonempty(baseline);
    std::int64_t sv = 0;
    std::int64_t sb = 0;
    for (const LogRecord& r : variant) {
        sv += r.reward;
    }
    for (const LogRecord& r : baseline) {
        sb += r.reward;
    }
    return uplift_from_counts(sv, static_cast<std::int64_t>(variant.size()),
                              sb, static_cast<std::int64_t>(baseline.size()));
}

GenerationReport make_generation_report(std::span<const LogRecord> logs) {
    require_nonempty(logs);
    GenerationReport report;
    report.rounds = static_cast<std::int64_t>(logs.size());

    std::int64_t explore_n = 0;
    std::int64_t explore_success = 0;
    std::int64_t exploit_n = 0;
    std::int64_t exploit_success = 0;
    for (const LogRecord& r : logs) {
        if (r.was_greedy) {
            exploit_n += 1;
            exploit_success += r.reward;
        } else {
            explore_n += 1;
            explore_success += r.reward;
        }
    }
    const double n = static_cast<double>(logs.size());
    const double w = static_cast<double>(explore_n) / n;
    report.effective_exploration = w;
    report.exploration_round_mean_reward =
        explore_n > 0 ? static_cast<double>(explore_success) /
                            static_cast<double>(explore_n)
                      : 0.0;
    report.exploitation_round_mean_reward =
        exploit_n > 0 ? static_cast<double>(exploit_success) /
                            static_cast<double>(exploit_n)
                      : 0.0;
    report.mean_reward = w * report.exploration_round_mean_reward +
                         (1.0 - w) * report.exploitation_round_mean_reward;
    report.positive_rate = positive_rate(logs);
    report.exploration_by_size = exploration_by_action_size(logs);

    auto groups_map = group_by_eligible_signature(logs);
    std::vector<TrafficGroup> groups;
    groups.reserve(groups_map.size());
    for (auto& [signature, group] : groups_map) {
        groups.push_back(std::move(group));
    }
    report.gini_weighted = traffic_weighted_gini(groups);

    const std::int64_t successes = explore_success + exploit_success;
    report.ci75 = wilson_interval(successes, report.rounds, 0.75);
    report.ci95 = wilson_interval(successes, report.rounds, 0.95);
    return report;
}

}  // namespace banditlab
