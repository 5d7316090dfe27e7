#include <doctest.h>

#include "banditlab/errors.hpp"
#include "banditlab/features.hpp"
#include "banditlab/rng.hpp"

using namespace banditlab;

namespace {

FeatureSchemaConfig tiny_schema_config() {
    FeatureSchemaConfig sc;
    sc.countries = 2;
    sc.merchants = 1;
    sc.mccs = 1;
    sc.devices = 1;
    sc.extra_numeric_dim = 0;
    sc.a_max = 3;
    sc.amount_scale_max = 100.0;
    return sc;
}

Context random_context(const FeatureSchemaConfig& sc, RngStream& rng) {
    Context ctx;
    ctx.country = static_cast<std::int32_t>(rng.uniform_int(sc.countries));
    ctx.merchant = static_cast<std::int32_t>(rng.uniform_int(sc.merchants));
    ctx.mcc = static_cast<std::int32_t>(rng.uniform_int(sc.mccs));
    ctx.device = static_cast<std::int32_t>(rng.uniform_int(sc.devices));
    ctx.amount = 200.0 * rng.uniform();
    ctx.extra_numeric.resize(static_cast<std::size_t>(sc.extra_numeric_dim));
    for (double& v : ctx.extra_numeric) {
        v = rng.normal();
    }
    return ctx;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("one-hot blocks land in the documented slots") {
    FeatureSchema schema(tiny_schema_config());
    Context ctx;
    ctx.country = 0;
    ctx.amount = 50.0;
    FeatureVector fv = schema.featurize(ctx, 1);

    REQUIRE(fv.values.size() == static_cast<std::size_t>(schema.dim()));
    CHECK(fv.values[schema.amount_offset()] == doctest::Approx(0.5));
    // country block [1, 0]
    CHECK(fv.values[schema.country_offset() + 0] == 1.0);
    CHECK(fv.values[schema.country_offset() + 1] == 0.0);
    // action block [0, 1, 0]
    CHECK(fv.values[schema.action_offset() + 0] == 0.0);
    CHECK(fv.values[schema.action_offset() + 1] == 1.0);
    CHECK(fv.values[schema.action_offset() + 2] == 0.0);
    // interaction block: single 1 at (country=0, action=1)
    int ones = 0;
    for (std::int32_t i = 0; i < 2 * 3; ++i) {
        ones += fv.values[schema.interaction_offset() + i] == 1.0 ? 1 : 0;
    }
    CHECK(ones == 1);
    CHECK(fv.values[schema.interaction_offset() + 0 * 3 + 1] == 1.0);
}

TEST_CASE("featurize is pure: repeat calls give bitwise-identical vectors") {
    FeatureSchemaConfig sc;
    FeatureSchema schema(sc);
    RngStream rng(42, 0);
    for (int i = 0; i < 500; ++i) {
        Context ctx = random_context(sc, rng);
        ActionId a = static_cast<ActionId>(rng.uniform_int(sc.a_max));
        FeatureVector first = schema.featurize(ctx, a);
        FeatureVector second = schema.featurize(ctx, a);
        REQUIRE(first.values == second.values);
        REQUIRE(first.schema_fp == second.schema_fp);
    }
}

TEST_CASE("one-hot invariants hold on random inputs") {
    FeatureSchemaConfig sc;
    FeatureSchema schema(sc);
    RngStream rng(7, 1);
    for (int i = 0; i < 200; ++i) {
        Context ctx = random_context(sc, rng);
        ActionId a = static_cast<ActionId>(rng.uniform_int(sc.a_max));
        FeatureVector fv = schema.featurize(ctx, a);
        auto block_ones = [&](std::int32_t off, std::int32_t len) {
            int ones = 0;
            for (std::int32_t k = 0; k < len; ++k) {
                double v = fv.values[static_cast<std::size_t>(off + k)];
                REQUIRE((v == 0.0 || v == 1.0));
                ones += v == 1.0 ? 1 : 0;
            }
            return ones;
        };
        CHECK(block_ones(schema.country_offset(), sc.countries) == 1);
        CHECK(block_ones(schema.merchant_offset(), sc.merchants) == 1);
        CHECK(block_ones(schema.mcc_offset(), sc.mccs) == 1);
        CHECK(block_ones(schema.device_offset(), sc.devices) == 1);
        CHECK(block_ones(schema.action_offset(), sc.a_max) == 1);
        CHECK(block_ones(schema.interaction_offset(),
                         sc.countries * sc.a_max) == 1);
        for (double v : fv.values) {
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("out-of-cardinality ids are schema errors") {
    FeatureSchema schema(tiny_schema_config());
    Context ctx;
    ctx.country = 2;  // cardinality 2
    CHECK_THROWS_AS(schema.featurize(ctx, 0), SchemaError);

    Context ok;
    CHECK_THROWS_AS(schema.featurize(ok, 3), SchemaError);  // a_max = 3
    CHECK_THROWS_AS(schema.featurize(ok, -1), SchemaError);

    Context wrong_extra;
    wrong_extra.extra_numeric = {1.0};  // configured dim is 0
    CHECK_THROWS_AS(schema.featurize(wrong_extra, 0), SchemaError);
}

TEST_CASE("fingerprint is stable under config identity and sensitive to it") {
    FeatureSchemaConfig sc = tiny_schema_config();
    CHECK(FeatureSchema(sc).fingerprint() == FeatureSchema(sc).fingerprint());
    FeatureSchemaConfig other = sc;
    other.countries = 3;
    CHECK(FeatureSchema(sc).fingerprint() !=
          FeatureSchema(other).fingerprint());
    FeatureSchemaConfig scaled = sc;
    scaled.amount_scale_max = 200.0;
    CHECK(FeatureSchema(sc).fingerprint() !=
          FeatureSchema(scaled).fingerprint());
}

TEST_CASE("amount scaling clamps into [0,1]") {
    FeatureSchema schema(tiny_schema_config());
    CHECK(schema.scale_amount(-5.0) == 0.0);
    CHECK(schema.scale_amount(0.0) == 0.0);
    CHECK(schema.scale_amount(1e9) == 1.0);
    CHECK(schema.scale_amount(25.0) == doctest::Approx(0.25));
}

}  // TEST_SUITE
