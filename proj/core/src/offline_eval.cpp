#include "banditlab/offline_eval.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "banditlab/errors.hpp"

namespace banditlab {

namespace {

struct WeightedLogs {
    std::vector<double> weights;  // clipped importance weights, log order
    std::vector<std::int32_t> rewards;
};

// Importance weight of each record: target probability of the logged action
// over the logged eligible set, divided by the logged propensity.
WeightedLogs compute_weights(std::span<const LogRecord> logs,
                             const TargetPolicy& target,
                             std::optional<double> clip) {
    if (logs.empty()) {
        throw ValidationError("off-policy evaluation needs non-empty logs");
    }
    if (target.oracle == nullptr || target.schema == nullptr) {
        throw ConfigError("target policy needs an oracle and a schema");
    }
    if (clip && !(*clip > 0.0)) {
        throw ConfigError("clip M must be > 0");
    }

    WeightedLogs out;
    out.weights.reserve(logs.size());
    out.rewards.reserve(logs.size());
    std::vector<double> scratch(
        static_cast<std::size_t>(target.schema->dim()));
    for (const LogRecord& r : logs) {
        if (!(r.propensity > 0.0)) {
            throw ValidationError("record with propensity <= 0");
        }
        PredictionVector preds;
        preds.by_action.reserve(r.eligible.size());
        for (ActionId a : r.eligible) {
            target.schema->featurize_into(r.context, a, scratch);
            preds.by_action.emplace_back(
                a, predict_values(*target.oracle, scratch));
        }
        ActionDistribution dist = policy_distribution(target.policy, preds);
        double pi = 0.0;
        bool found = false;
        for (const auto& [id, p] : dist.probs) {
            if (id == r.chosen) {
                pi = p;
                found = true;
                break;
            }
        }
        if (!found) {
            throw SchemaError(
                "target assigns no probability over the logged eligible set "
                "for chosen action " +
                std::to_string(r.chosen));
        }
        double w = pi / r.propensity;
        if (clip) {
            w = std::min(w, *clip);
        }
        out.weights.push_back(w);
        out.rewards.push_back(r.reward);
    }
    return out;
}

void fill_summary(OffPolicyEstimate& est, const WeightedLogs& wl,
                  std::optional<double> clip) {
    est.n = static_cast<std::int64_t>(wl.weights.size());
    est.clip = clip;
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    double max_w = 0.0;
    for (double w : wl.weights) {
        sum_w += w;
        sum_w2 += w * w;
        max_w = std::max(max_w, w);
    }
    est.max_weight = max_w;
    est.mean_weight = sum_w / static_cast<double>(wl.weights.size());
    est.effective_sample_size =
        sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
}

}  // namespace

OffPolicyEstimate ips_value(std::span<const LogRecord> logs,
                            const TargetPolicy& target,
                            std::optional<double> clip) {
    WeightedLogs wl = compute_weights(logs, target, clip);
    double total = 0.0;
    for (std::size_t i = 0; i < wl.weights.size(); ++i) {
        total += static_cast<double>(wl.rewards[i]) * wl.weights[i];
    }
    OffPolicyEstimate est;
    est.estimator = "ips";
    est.value = total / static_cast<double>(wl.weights.size());
    fill_summary(est, wl, clip);
    return est;
}

OffPolicyEstimate snips_value(std::span<const LogRecord> logs,
                              const TargetPolicy& target,
                              std::optional<double> clip) {
    WeightedLogs wl = compute_weights(logs, target, clip);
    double numer = 0.0;
    double denom = 0.0;
    for (std::size_t i = 0; i < wl.weights.size(); ++i) {
        numer += static_cast<double>(wl.rewards[i]) * wl.weights[i];
        denom += wl.weights[i];
    }
    if (denom <= 0.0) {
        throw ValidationError("snips: all importance weights are zero");
    }
    OffPolicyEstimate est;
    est.estimator = "snips";
    est.value = numer / denom;
    fill_summary(est, wl, clip);
    return est;
}

}  // namespace banditlab
