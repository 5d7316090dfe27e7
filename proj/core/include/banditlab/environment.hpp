#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "banditlab/features.hpp"
#include "banditlab/rng.hpp"
#include "banditlab/types.hpp"

namespace banditlab {

struct EnvConfig {
    std::int32_t countries = 8;
    std::int32_t merchants = 20;
    std::int32_t mccs = 6;
    std::int32_t devices = 4;
    double amount_mu = 3.5;     // log-normal location
    double amount_sigma = 1.0;  // log-normal scale
    std::int32_t extra_numeric_dim = 3;
    std::int32_t a_max = 15;
    std::uint64_t rule_seed = 1013;
    // Bernoulli density of the rule table; the default is calibrated so the
    // eligible-set size has median 4 under this config.
    double rule_density = 0.2667;
    std::int64_t min_samples = 200;   // risk pruning: observations needed
    double min_auth_rate = 0.5;       // risk pruning: rate floor
    std::uint64_t hidden_seed = 7;
    double lambda = 0.5;              // misspecification strength, >= 0
    double base_rate_target = 0.90;   // greedy-optimal positive-rate target
    double amount_scale_max = 350.0;

    void validate() const;
    FeatureSchemaConfig schema_config() const;
    std::uint64_t hash() const;  // stable hash for log headers
};

// Seeded (country, mcc, amount-band, action) eligibility mask. Amount bands
// are the quintiles of the configured log-normal. Every row keeps at least
// two eligible actions (rows violating the floor are redrawn at build time).
class RuleTable {
public:
    RuleTable() = default;
    explicit RuleTable(const EnvConfig& cfg);

    static constexpr std::int32_t kAmountBands = 5;

    std::int32_t amount_band(double amount) const;
    std::uint64_t row_mask(std::int32_t country, std::int32_t mcc,
                           std::int32_t band) const;

private:
    std::int32_t countries_ = 0;
    std::int32_t mccs_ = 0;
    std::int32_t a_max_ = 0;
    std::vector<double> band_edges_;     // 4 interior quintile edges
    std::vector<std::uint64_t> masks_;   // countries x mccs x bands
};

// Per (merchant, country, action) authorization counters.
class RiskStats {
public:
    struct Bucket {
        std::int64_t success = 0;
        std::int64_t total = 0;
    };

    Bucket lookup(std::int32_t merchant, std::int32_t country,
                  ActionId action) const;
    void add(std::int32_t merchant, std::int32_t country, ActionId action,
             std::int32_t reward);
    std::size_t size() const { return buckets_.size(); }

private:
    static std::uint64_t key(std::int32_t merchant, std::int32_t country,
                             ActionId action);
    std::unordered_map<std::uint64_t, Bucket> buckets_;
};

void update_risk_stats(RiskStats& stats, const LogRecord& record);

// Hidden Bernoulli reward model: sigmoid of a linear form over the feature
// schema plus lambda-scaled products of the numeric features. The intercept
// is calibrated at build time so the greedy-optimal positive rate hits
// base_rate_target. Oracles and policies never see this object.
class HiddenRewardModel {
public:
    HiddenRewardModel() = default;

    double true_logit(const Context& ctx, ActionId action) const;
    double true_reward_prob(const Context& ctx, ActionId action) const;

    // Weight layout matches FeatureSchema; exposed for tests and for
    // experiment-reproducibility serialization.
    std::vector<double> linear;     // schema dim
    std::vector<double> nonlinear;  // pairwise products of numerics
    double intercept = 0.0;
    double lambda = 0.0;
    FeatureSchema schema;

private:
    friend struct Environment;
};

struct Environment {
    EnvConfig cfg;
    FeatureSchema schema;
    RuleTable rules;
    HiddenRewardModel hidden;

    static Environment build(const EnvConfig& cfg);
};

Context gen_context(const EnvConfig& cfg, RngStream& rng);

// Rule filter then risk pruning. If pruning would empty the set, the
// rule-eligible action with the highest observed success rate is retained.
ActionSet eligible_actions(const Context& ctx, const RiskStats& stats,
                           const RuleTable& rules, const EnvConfig& cfg);

double true_reward_prob(const Context& ctx, ActionId action,
                        const HiddenRewardModel& model);

std::int32_t draw_reward(double p, RngStream& rng);

}  // namespace banditlab
