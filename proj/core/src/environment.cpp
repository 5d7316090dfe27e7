#include "banditlab/environment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <string>

#include "banditlab/errors.hpp"

namespace banditlab {

namespace {

// Standard normal quantiles at 0.2/0.4/0.6/0.8 for the amount quintiles.
constexpr double kQuintileZ[4] = {-0.8416212335729143, -0.2533471031357997,
                                  0.2533471031357997, 0.8416212335729143};

// Weight scales per schema block for the hidden model draw. Action and
// interaction blocks dominate so actions genuinely differ per segment.
constexpr double kAmountScale = 0.3;
constexpr double kCategoricalScale = 0.3;
constexpr double kExtraScale = 0.3;
constexpr double kActionScale = 0.7;
constexpr double kInteractionScale = 0.5;
constexpr double kNonlinearScale = 0.6;

constexpr std::uint64_t kRuleStream = 0x52554c45;        // rule table draws
constexpr std::uint64_t kHiddenStream = 0x484d4f44;      // hidden weights
constexpr std::uint64_t kCalibrationStream = 0x43414c49; // intercept search

}  // namespace

void EnvConfig::validate() const {
    if (countries < 1 || merchants < 1 || mccs < 1 || devices < 1) {
        throw ConfigError("env: cardinalities must be >= 1");
    }
    if (a_max < 2 || a_max > 64) {
        throw ConfigError("env: a_max must lie in [2, 64]");
    }
    if (extra_numeric_dim < 0) {
        throw ConfigError("env: extra_numeric_dim must be >= 0");
    }
    if (!(amount_sigma > 0.0)) {
        throw ConfigError("env: amount_sigma must be > 0");
    }
    if (!(rule_density > 0.0) || rule_density > 1.0) {
        throw ConfigError("env: rule_density must lie in (0,1]");
    }
    if (min_samples < 1) {
        throw ConfigError("env: min_samples must be >= 1");
    }
    if (!(min_auth_rate >= 0.0) || min_auth_rate > 1.0) {
        throw ConfigError("env: min_auth_rate must lie in [0,1]");
    }
    if (!(lambda >= 0.0)) {
        throw ConfigError("env: lambda must be >= 0");
    }
    if (!(base_rate_target > 0.0) || !(base_rate_target < 1.0)) {
        throw ConfigError("env: base_rate_target must lie in (0,1)");
    }
    if (!(amount_scale_max > 0.0)) {
        throw ConfigError("env: amount_scale_max must be > 0");
    }
}

FeatureSchemaConfig EnvConfig::schema_config() const {
    FeatureSchemaConfig sc;
    sc.countries = countries;
    sc.merchants = merchants;
    sc.mccs = mccs;
    sc.devices = devices;
    sc.extra_numeric_dim = extra_numeric_dim;
    sc.a_max = a_max;
    sc.amount_scale_max = amount_scale_max;
    return sc;
}

std::uint64_t EnvConfig::hash() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "banditlab-env-v1|%d|%d|%d|%d|%.17g|%.17g|%d|%d|%llu|%.17g|"
                  "%lld|%.17g|%llu|%.17g|%.17g|%.17g",
                  countries, merchants, mccs, devices, amount_mu, amount_sigma,
                  extra_numeric_dim, a_max,
                  static_cast<unsigned long long>(rule_seed), rule_density,
                  static_cast<long long>(min_samples), min_auth_rate,
                  static_cast<unsigned long long>(hidden_seed), lambda,
                  base_rate_target, amount_scale_max);
    return fnv1a64(buf);
}

RuleTable::RuleTable(const EnvConfig& cfg)
    : countries_(cfg.countries), mccs_(cfg.mccs), a_max_(cfg.a_max) {
    cfg.validate();
    band_edges_.reserve(4);
    for (double z : kQuintileZ) {
        band_edges_.push_back(std::exp(cfg.amount_mu + cfg.amount_sigma * z));
    }

    RngStream rng(cfg.rule_seed, kRuleStream);
    const std::size_t rows = static_cast<std::size_t>(countries_) *
                             static_cast<std::size_t>(mccs_) * kAmountBands;
    masks_.resize(rows);
    for (std::size_t row = 0; row < rows; ++row) {
        std::uint64_t mask = 0;
        do {
            mask = 0;
            for (std::int32_t a = 0; a < a_max_; ++a) {
                if (rng.bernoulli(cfg.rule_density)) {
                    mask |= std::uint64_t{1} << a;
                }
            }
        } while (std::popcount(mask) < 2);
        masks_[row] = mask;
    }
}

std::int32_t RuleTable::amount_band(double amount) const {
    std::int32_t band = 0;
    while (band < kAmountBands - 1 &&
           amount > band_edges_[static_cast<std::size_t>(band)]) {
        ++band;
    }
    return band;
}

std::uint64_t RuleTable::row_mask(std::int32_t country, std::int32_t mcc,
                                  std::int32_t band) const {
    std::size_t row =
        (static_cast<std::size_t>(country) * static_cast<std::size_t>(mccs_) +
         static_cast<std::size_t>(mcc)) *
            kAmountBands +
        static_cast<std::size_t>(band);
    return masks_[row];
}

std::uint64_t RiskStats::key(std::int32_t merchant, std::int32_t country,
                             ActionId action) {
    return (static_cast<std::uint64_t>(merchant) << 32) |
           (static_cast<std::uint64_t>(country) << 16) |
           static_cast<std::uint64_t>(action);
}

RiskStats::Bucket RiskStats::lookup(std::int32_t merchant,
                                    std::int32_t country,
                                    ActionId action) const {
    auto it = buckets_.find(key(merchant, country, action));
    return it == buckets_.end() ? Bucket{} : it->second;
}

void RiskStats::add(std::int32_t merchant, std::int32_t country,
                    ActionId action, std::int32_t reward) {
    Bucket& b = buckets_[key(merchant, country, action)];
    b.total += 1;
    b.success += reward;
}

void update_risk_stats(RiskStats& stats, const LogRecord& record) {
    stats.add(record.context.merchant, record.context.country, record.chosen,
              record.reward);
}

Context gen_context(const EnvConfig& cfg, RngStream& rng) {
    Context ctx;
    ctx.country = static_cast<std::int32_t>(rng.uniform_int(cfg.countries));
    ctx.merchant = static_cast<std::int32_t>(rng.uniform_int(cfg.merchants));
    ctx.mcc = static_cast<std::int32_t>(rng.uniform_int(cfg.mccs));
    ctx.device = static_cast<std::int32_t>(rng.uniform_int(cfg.devices));
    ctx.amount = std::exp(cfg.amount_mu + cfg.amount_sigma * rng.normal());
    ctx.extra_numeric.resize(static_cast<std::size_t>(cfg.extra_numeric_dim));
    for (double& v : ctx.extra_numeric) {
        v = rng.normal();
    }
    return ctx;
}

ActionSet eligible_actions(const Context& ctx, const RiskStats& stats,
                           const RuleTable& rules, const EnvConfig& cfg) {
    const std::int32_t band = rules.amount_band(ctx.amount);
    const std::uint64_t mask = rules.row_mask(ctx.country, ctx.mcc, band);

    ActionSet set;
    std::vector<ActionId> rule_eligible;
    for (ActionId a = 0; a < cfg.a_max; ++a) {
        if (mask & (std::uint64_t{1} << a)) {
            rule_eligible.push_back(a);
        } else {
            set.excluded_by_rule.push_back(a);
        }
    }
    if (rule_eligible.empty()) {
        throw ConfigError("rule table left zero eligible actions");
    }

    for (ActionId a : rule_eligible) {
        RiskStats::Bucket b = stats.lookup(ctx.merchant, ctx.country, a);
        bool risky = b.total >= cfg.min_samples &&
                     static_cast<double>(b.success) <
                         cfg.min_auth_rate * static_cast<double>(b.total);
        if (risky) {
            set.excluded_by_risk.push_back(a);
        } else {
            set.eligible.push_back(a);
        }
    }

    if (set.eligible.empty()) {
        // Keep the best-rate rule-eligible action; ties to the lowest id.
        ActionId best = set.excluded_by_risk.front();
        double best_rate = -1.0;
        for (ActionId a : set.excluded_by_risk) {
            RiskStats::Bucket b = stats.lookup(ctx.merchant, ctx.country, a);
            double rate = b.total > 0 ? static_cast<double>(b.success) /
                                            static_cast<double>(b.total)
                                      : 0.0;
            if (rate > best_rate) {
                best_rate = rate;
                best = a;
            }
        }
        set.eligible.push_back(best);
        std::erase(set.excluded_by_risk, best);
    }
    return set;
}

double HiddenRewardModel::true_logit(const Context& ctx,
                                     ActionId action) const {
    const FeatureSchemaConfig& sc = schema.config();
    if (ctx.country < 0 || ctx.country >= sc.countries || action < 0 ||
        action >= sc.a_max) {
        throw SchemaError("context/action outside hidden model schema");
    }
    double z = intercept;
    const double amount_scaled = schema.scale_amount(ctx.amount);
    z += linear[static_cast<std::size_t>(schema.amount_offset())] *
         amount_scaled;
    z += linear[static_cast<std::size_t>(schema.country_offset() +
                                         ctx.country)];
    z += linear[static_cast<std::size_t>(schema.merchant_offset() +
                                         ctx.merchant)];
    z += linear[static_cast<std::size_t>(schema.mcc_offset() + ctx.mcc)];
    z += linear[static_cast<std::size_t>(schema.device_offset() +
                                         ctx.device)];
    for (std::int32_t i = 0; i < sc.extra_numeric_dim; ++i) {
        z += linear[static_cast<std::size_t>(schema.extra_offset() + i)] *
             ctx.extra_numeric[static_cast<std::size_t>(i)];
    }
    z += linear[static_cast<std::size_t>(schema.action_offset() + action)];
    z += linear[static_cast<std::size_t>(schema.interaction_offset() +
                                         ctx.country * sc.a_max + action)];

    if (lambda > 0.0 && !nonlinear.empty()) {
        // Pairwise products over [amount_scaled, xnum...].
        double nl = 0.0;
        std::size_t term = 0;
        const std::int32_t m = 1 + sc.extra_numeric_dim;
        for (std::int32_t i = 0; i < m; ++i) {
            double xi = i == 0 ? amount_scaled
                               : ctx.extra_numeric[static_cast<std::size_t>(
                                     i - 1)];
            for (std::int32_t j = i; j < m; ++j) {
                double xj =
                    j == 0 ? amount_scaled
                           : ctx.extra_numeric[static_cast<std::size_t>(j - 1)];
                nl += nonlinear[term++] * xi * xj;
            }
        }
        z += lambda * nl;
    }
    return z;
}

double HiddenRewardModel::true_reward_prob(const Context& ctx,
                                           ActionId action) const {
    double z = true_logit(ctx, action);
    double p = 1.0 / (1.0 + std::exp(-z));
    // Stay strictly inside (0,1).
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

double true_reward_prob(const Context& ctx, ActionId action,
                        const HiddenRewardModel& model) {
    return model.true_reward_prob(ctx, action);
}

std::int32_t draw_reward(double p, RngStream& rng) {
    if (!(p >= 0.0) || !(p <= 1.0)) {
        throw ValidationError("reward probability outside [0,1]");
    }
    return rng.uniform() < p ? 1 : 0;
}

Environment Environment::build(const EnvConfig& cfg) {
    cfg.validate();
    Environment env;
    env.cfg = cfg;
    env.schema = FeatureSchema(cfg.schema_config());
    env.rules = RuleTable(cfg);

    HiddenRewardModel& model = env.hidden;
    model.schema = env.schema;
    model.lambda = cfg.lambda;
    model.linear.assign(static_cast<std::size_t>(env.schema.dim()), 0.0);

    RngStream wrng(cfg.hidden_seed, kHiddenStream);
    auto draw_block = [&](std::int32_t offset, std::int32_t count,
                          double scale) {
        for (std::int32_t i = 0; i < count; ++i) {
            model.linear[static_cast<std::size_t>(offset + i)] =
                scale * wrng.normal();
        }
    };
    draw_block(env.schema.amount_offset(), 1, kAmountScale);
    draw_block(env.schema.country_offset(), cfg.countries, kCategoricalScale);
    draw_block(env.schema.merchant_offset(), cfg.merchants, kCategoricalScale);
    draw_block(env.schema.mcc_offset(), cfg.mccs, kCategoricalScale);
    draw_block(env.schema.device_offset(), cfg.devices, kCategoricalScale);
    draw_block(env.schema.extra_offset(), cfg.extra_numeric_dim, kExtraScale);
    draw_block(env.schema.action_offset(), cfg.a_max, kActionScale);
    draw_block(env.schema.interaction_offset(), cfg.countries * cfg.a_max,
               kInteractionScale);

    const std::int32_t m = 1 + cfg.extra_numeric_dim;
    model.nonlinear.resize(static_cast<std::size_t>(m * (m + 1) / 2));
    for (double& v : model.nonlinear) {
        v = kNonlinearScale * wrng.normal();
    }

    // Intercept calibration: bisect so the mean true reward probability of
    // the per-context best action (over the rule-eligible set, no risk
    // stats) hits base_rate_target. The mean is monotone in the intercept.
    constexpr std::int64_t kCalibrationContexts = 20000;
    RngStream crng(cfg.hidden_seed, kCalibrationStream);
    RiskStats empty_stats;
    std::vector<Context> contexts;
    std::vector<std::vector<ActionId>> eligibles;
    contexts.reserve(kCalibrationContexts);
    eligibles.reserve(kCalibrationContexts);
    for (std::int64_t i = 0; i < kCalibrationContexts; ++i) {
        Context ctx = gen_context(cfg, crng);
        ActionSet set = eligible_actions(ctx, empty_stats, env.rules, cfg);
        contexts.push_back(std::move(ctx));
        eligibles.push_back(std::move(set.eligible));
    }
    auto greedy_mean = [&](double intercept) {
        model.intercept = intercept;
        double total = 0.0;
        for (std::size_t i = 0; i < contexts.size(); ++i) {
            double best = 0.0;
            for (ActionId a : eligibles[i]) {
                best = std::max(best, model.true_reward_prob(contexts[i], a));
            }
            total += best;
        }
        return total / static_cast<double>(contexts.size());
    };
    double lo = -12.0;
    double hi = 12.0;
    for (int iter = 0; iter < 60; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (greedy_mean(mid) < cfg.base_rate_target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    model.intercept = 0.5 * (lo + hi);
    return env;
}

}  // namespace banditlab
