#include "banditlab/features.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "banditlab/errors.hpp"
#include "banditlab/rng.hpp"

namespace banditlab {

namespace {

void check_card(std::int32_t value, std::int32_t cardinality, const char* name) {
    if (value < 0 || value >= cardinality) {
        throw SchemaError(std::string(name) + " id " + std::to_string(value) +
                          " outside cardinality " + std::to_string(cardinality));
    }
}

}  // namespace

FeatureSchema::FeatureSchema(const FeatureSchemaConfig& cfg) : cfg_(cfg) {
    if (cfg.countries < 1 || cfg.merchants < 1 || cfg.mccs < 1 ||
        cfg.devices < 1 || cfg.a_max < 2 || cfg.extra_numeric_dim < 0 ||
        !(cfg.amount_scale_max > 0.0)) {
        throw ConfigError("invalid feature schema config");
    }
    merchant_off_ = 1 + cfg.countries;
    mcc_off_ = merchant_off_ + cfg.merchants;
    device_off_ = mcc_off_ + cfg.mccs;
    extra_off_ = device_off_ + cfg.devices;
    action_off_ = extra_off_ + cfg.extra_numeric_dim;
    interaction_off_ = action_off_ + cfg.a_max;
    dim_ = interaction_off_ + cfg.countries * cfg.a_max;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "banditlab-schema-v1|C=%d|M=%d|K=%d|D=%d|E=%d|A=%d|amt=%.17g",
                  cfg.countries, cfg.merchants, cfg.mccs, cfg.devices,
                  cfg.extra_numeric_dim, cfg.a_max, cfg.amount_scale_max);
    fingerprint_ = fnv1a64(buf);
}

double FeatureSchema::scale_amount(double amount) const {
    return std::clamp(amount / cfg_.amount_scale_max, 0.0, 1.0);
}

void FeatureSchema::featurize_into(const Context& ctx, ActionId action,
                                   std::span<double> out) const {
    check_card(ctx.country, cfg_.countries, "country");
    check_card(ctx.merchant, cfg_.merchants, "merchant");
    check_card(ctx.mcc, cfg_.mccs, "mcc");
    check_card(ctx.device, cfg_.devices, "device");
    check_card(action, cfg_.a_max, "action");
    if (static_cast<std::int32_t>(ctx.extra_numeric.size()) !=
        cfg_.extra_numeric_dim) {
        throw SchemaError("extra_numeric length " +
                          std::to_string(ctx.extra_numeric.size()) +
                          " != configured " +
                          std::to_string(cfg_.extra_numeric_dim));
    }
    if (out.size() != static_cast<std::size_t>(dim_)) {
        throw SchemaError("feature buffer size mismatch");
    }

    std::fill(out.begin(), out.end(), 0.0);
    out[amount_offset()] = scale_amount(ctx.amount);
    out[country_offset() + ctx.country] = 1.0;
    out[merchant_off_ + ctx.merchant] = 1.0;
    out[mcc_off_ + ctx.mcc] = 1.0;
    out[device_off_ + ctx.device] = 1.0;
    for (std::int32_t i = 0; i < cfg_.extra_numeric_dim; ++i) {
        out[extra_off_ + i] = ctx.extra_numeric[static_cast<std::size_t>(i)];
    }
    out[action_off_ + action] = 1.0;
    out[interaction_off_ + ctx.country * cfg_.a_max + action] = 1.0;
}

FeatureVector FeatureSchema::featurize(const Context& ctx, ActionId action) const {
    FeatureVector fv;
    fv.values.resize(static_cast<std::size_t>(dim_));
    featurize_into(ctx, action, fv.values);
    fv.schema_fp = fingerprint_;
    return fv;
}

}  // namespace banditlab
