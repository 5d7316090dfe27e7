#pragma once

#include <span>
#include <utility>
#include <vector>

#include "banditlab/rng.hpp"
#include "banditlab/types.hpp"

namespace banditlab {

// Oracle predictions over the eligible set of one round.
struct PredictionVector {
    std::vector<std::pair<ActionId, double>> by_action;
};

// Probabilities sum to 1; greedy_id carries maximal probability.
struct ActionDistribution {
    std::vector<std::pair<ActionId, double>> probs;
    ActionId greedy_id = 0;
};

enum class PolicyKind { Greedy, EpsilonGreedy, SquareCb };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Greedy;
    double epsilon = 0.0;  // EpsilonGreedy
    double gamma = 0.0;    // SquareCb

    // Nominal exploration rate of the policy, when it has one.
    // SquareCB's exploration emerges from the gaps, so it reports none.
    bool has_nominal_exploration() const {
        return kind != PolicyKind::SquareCb;
    }
    double nominal_exploration() const {
        return kind == PolicyKind::EpsilonGreedy ? epsilon : 0.0;
    }
};

// Action with maximal prediction; ties break to the lowest ActionId.
ActionId greedy_action(const PredictionVector& preds);

// Point mass on the greedy action.
ActionDistribution greedy_distribution(const PredictionVector& preds);

// Greedy action receives 1 - eps + eps/|A|, every other action eps/|A|:
// the random branch is uniform over ALL eligible actions, greedy included.
ActionDistribution epsilon_greedy_distribution(const PredictionVector& preds,
                                               double epsilon);

// Inverse-gap weighting: with mu = |A| and b the greedy action,
//   p_a = 1 / (mu + gamma * (r_b - r_a))   for a != b,
//   p_b = 1 - sum of the others.
// Guarantees p_b >= 1/|A| >= p_a and smaller gaps get larger probability.
ActionDistribution squarecb_distribution(const PredictionVector& preds,
                                         double gamma);

// Uniform logging distribution over an eligible set (generation 0).
ActionDistribution uniform_distribution(std::span<const ActionId> eligible);

ActionDistribution policy_distribution(const PolicyConfig& policy,
                                       const PredictionVector& preds);

struct SampleResult {
    ActionId action = 0;
    double propensity = 1.0;
    bool was_greedy = false;
};

SampleResult sample_action(const ActionDistribution& dist, RngStream& rng);

}  // namespace banditlab
