#include "banditlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "banditlab/errors.hpp"

namespace banditlab {

namespace {

void check_predictions(const PredictionVector& preds) {
    if (preds.by_action.empty()) {
        throw ValidationError("empty prediction vector");
    }
    std::set<ActionId> seen;
    for (const auto& [id, p] : preds.by_action) {
        if (!(p >= 0.0) || !(p <= 1.0)) {
            throw ValidationError("prediction outside [0,1] for action " +
                                  std::to_string(id));
        }
        if (!seen.insert(id).second) {
            throw ValidationError("duplicate action id " + std::to_string(id) +
                                  " in prediction vector");
        }
    }
}

}  // namespace

ActionId greedy_action(const PredictionVector& preds) {
    check_predictions(preds);
    ActionId best_id = preds.by_action.front().first;
    double best_score = preds.by_action.front().second;
    for (const auto& [id, score] : preds.by_action) {
        if (score > best_score || (score == best_score && id < best_id)) {
            best_id = id;
            best_score = score;
        }
    }
    return best_id;
}

ActionDistribution greedy_distribution(const PredictionVector& preds) {
    ActionId greedy = greedy_action(preds);
    ActionDistribution dist;
    dist.greedy_id = greedy;
    dist.probs.reserve(preds.by_action.size());
    for (const auto& [id, score] : preds.by_action) {
        (void)score;
        dist.probs.emplace_back(id, id == greedy ? 1.0 : 0.0);
    }
    return dist;
}

ActionDistribution epsilon_greedy_distribution(const PredictionVector& preds,
                                               double epsilon) {
    if (!(epsilon >= 0.0) || !(epsilon <= 1.0)) {
        throw ValidationError("epsilon must lie in [0,1]");
    }
    ActionId greedy = greedy_action(preds);
    const double n = static_cast<double>(preds.by_action.size());
    ActionDistribution dist;
    dist.greedy_id = greedy;
    dist.probs.reserve(preds.by_action.size());
    for (const auto& [id, score] : preds.by_action) {
        (void)score;
        double p = epsilon / n + (id == greedy ? 1.0 - epsilon : 0.0);
        dist.probs.emplace_back(id, p);
    }
    return dist;
}

ActionDistribution squarecb_distribution(const PredictionVector& preds,
                                         double gamma) {
    if (!(gamma > 0.0)) {
        throw ValidationError("gamma must be > 0");
    }
    ActionId greedy = greedy_action(preds);
    double greedy_score = 0.0;
    for (const auto& [id, score] : preds.by_action) {
        if (id == greedy) {
            greedy_score = score;
        }
    }
    const double mu = static_cast<double>(preds.by_action.size());
    ActionDistribution dist;
    dist.greedy_id = greedy;
    dist.probs.reserve(preds.by_action.size());
    double others = 0.0;
    std::size_t greedy_slot = 0;
    for (const auto& [id, score] : preds.by_action) {
        if (id == greedy) {
            greedy_slot = dist.probs.size();
            dist.probs.emplace_back(id, 0.0);
            continue;
        }
        double gap = greedy_score - score;  // >= 0 by construction
        double p = 1.0 / (mu + gamma * gap);
        others += p;
        dist.probs.emplace_back(id, p);
    }
    dist.probs[greedy_slot].second = 1.0 - others;
    return dist;
}

ActionDistribution uniform_distribution(std::span<const ActionId> eligible) {
    if (eligible.empty()) {
        throw ValidationError("empty eligible set");
    }
    ActionDistribution dist;
    dist.greedy_id = *std::min_element(eligible.begin(), eligible.end());
    const double p = 1.0 / static_cast<double>(eligible.size());
    dist.probs.reserve(eligible.size());
    for (ActionId id : eligible) {
        dist.probs.emplace_back(id, p);
    }
    return dist;
}

ActionDistribution policy_distribution(const PolicyConfig& policy,
                                       const PredictionVector& preds) {
    switch (policy.kind) {
        case PolicyKind::Greedy:
            return greedy_distribution(preds);
        case PolicyKind::EpsilonGreedy:
            return epsilon_greedy_distribution(preds, policy.epsilon);
        case PolicyKind::SquareCb:
            return squarecb_distribution(preds, policy.gamma);
    }
    throw ConfigError("unknown policy kind");
}

SampleResult sample_action(const ActionDistribution& dist, RngStream& rng) {
    if (dist.probs.empty()) {
        throw ValidationError("empty action distribution");
    }
    double u = rng.uniform();
    double cumulative = 0.0;
    // Rounding residue falls through to the last action with positive mass.
    std::size_t pick = 0;
    bool picked = false;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        if (dist.probs[i].second > 0.0) {
            last_positive = i;
        }
        cumulative += dist.probs[i].second;
        if (!picked && u < cumulative && dist.probs[i].second > 0.0) {
            pick = i;
            picked = true;
        }
    }
    if (!picked) {
        pick = last_positive;
    }
    SampleResult result;
    result.action = dist.probs[pick].first;
    result.propensity = dist.probs[pick].second;
    result.was_greedy = result.action == dist.greedy_id;
    return result;
}

}  // namespace banditlab
