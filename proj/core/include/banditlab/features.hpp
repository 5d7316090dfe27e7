#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "banditlab/types.hpp"

namespace banditlab {

struct FeatureSchemaConfig {
    std::int32_t countries = 8;
    std::int32_t merchants = 20;
    std::int32_t mccs = 6;
    std::int32_t devices = 4;
    std::int32_t extra_numeric_dim = 3;
    std::int32_t a_max = 15;
    // Declared upper bound for min-max scaling of `amount`; amounts are
    // clamped into [0, amount_scale_max] before scaling.
    double amount_scale_max = 350.0;
};

// Dense feature vector tied to the schema that produced it.
struct FeatureVector {
    std::vector<double> values;
    std::uint64_t schema_fp = 0;
};

// Fixed layout for (context, action) pairs:
//   [amount(1)] [country 1-hot] [merchant 1-hot] [mcc 1-hot] [device 1-hot]
//   [extra numerics] [action 1-hot] [country x action 1-hot]
// Featurization is a pure function; identical inputs give identical vectors.
class FeatureSchema {
public:
    FeatureSchema() : FeatureSchema(FeatureSchemaConfig{}) {}
    explicit FeatureSchema(const FeatureSchemaConfig& cfg);

    const FeatureSchemaConfig& config() const { return cfg_; }
    std::int32_t dim() const { return dim_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    std::int32_t amount_offset() const { return 0; }
    std::int32_t country_offset() const { return 1; }
    std::int32_t merchant_offset() const { return merchant_off_; }
    std::int32_t mcc_offset() const { return mcc_off_; }
    std::int32_t device_offset() const { return device_off_; }
    std::int32_t extra_offset() const { return extra_off_; }
    std::int32_t action_offset() const { return action_off_; }
    std::int32_t interaction_offset() const { return interaction_off_; }

    double scale_amount(double amount) const;

    // Writes the encoding into `out` (must have size dim()). Throws
    // SchemaError when an id falls outside the configured cardinalities.
    void featurize_into(const Context& ctx, ActionId action,
                        std::span<double> out) const;

    FeatureVector featurize(const Context& ctx, ActionId action) const;

private:
    FeatureSchemaConfig cfg_;
    std::int32_t merchant_off_ = 0;
    std::int32_t mcc_off_ = 0;
    std::int32_t device_off_ = 0;
    std::int32_t extra_off_ = 0;
    std::int32_t action_off_ = 0;
    std::int32_t interaction_off_ = 0;
    std::int32_t dim_ = 0;
    std::uint64_t fingerprint_ = 0;
};

inline FeatureVector featurize(const Context& ctx, ActionId action,
                               const FeatureSchema& schema) {
    return schema.featurize(ctx, action);
}

}  // namespace banditlab
