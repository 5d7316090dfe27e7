#include <doctest.h>

#include <cmath>
#include <vector>

#include "banditlab/errors.hpp"
#include "banditlab/metrics.hpp"
#include "banditlab/rng.hpp"

using namespace banditlab;

namespace {

LogRecord quick_record(bool greedy, std::int32_t reward,
                       std::vector<ActionId> eligible, ActionId chosen) {
    LogRecord r;
    r.eligible = std::move(eligible);
    r.chosen = chosen;
    r.propensity = 0.5;
    r.reward = reward;
    r.was_greedy = greedy;
    return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("effective exploration counting") {
    std::vector<LogRecord> logs;
    for (int i = 0; i < 10; ++i) {
        logs.push_back(quick_record(i >= 3, 1, {0, 1}, 0));
    }
    CHECK(effective_exploration_rate(logs) == doctest::Approx(0.3));

    std::vector<LogRecord> all_greedy(5, quick_record(true, 1, {0, 1}, 0));
    CHECK(effective_exploration_rate(all_greedy) == 0.0);
    CHECK_THROWS_AS(effective_exploration_rate(std::vector<LogRecord>{}),
                    ValidationError);
}

TEST_CASE("exploration by action-space size") {
    std::vector<LogRecord> logs;
    logs.push_back(quick_record(true, 1, {0, 1}, 0));
    logs.push_back(quick_record(false, 1, {0, 1}, 1));
    logs.push_back(quick_record(true, 1, {0, 1, 2}, 0));
    auto rates = exploration_by_action_size(logs);
    REQUIRE(rates.size() == 2);
    CHECK(rates.at(2) == doctest::Approx(0.5));
    CHECK(rates.at(3) == 0.0);

    std::vector<LogRecord> single(4, quick_record(false, 0, {0, 1}, 1));
    auto one = exploration_by_action_size(single);
    REQUIRE(one.size() == 1);
    CHECK(one.at(2) == effective_exploration_rate(single));
}

TEST_CASE("lorenz curve shapes") {
    std::vector<std::int64_t> equal{5, 5, 5, 5};
    LorenzCurve c = lorenz_curve(equal);
    REQUIRE(c.points.size() == 5);
    CHECK(c.points[0] == std::pair{0.0, 0.0});
    CHECK(c.points[1] == std::pair{0.25, 0.25});
    CHECK(c.points[2] == std::pair{0.5, 0.5});
    CHECK(c.points[4] == std::pair{1.0, 1.0});

    std::vector<std::int64_t> onehot{10, 0, 0, 0};
    LorenzCurve h = lorenz_curve(onehot);
    CHECK(h.points[1] == std::pair{0.25, 0.0});
    CHECK(h.points[3] == std::pair{0.75, 0.0});
    CHECK(h.points[4] == std::pair{1.0, 1.0});

    std::vector<std::int64_t> pair31{3, 1};
    LorenzCurve p = lorenz_curve(pair31);
    CHECK(p.points[1] == std::pair{0.5, 0.25});
    CHECK(p.points[2] == std::pair{1.0, 1.0});

    CHECK_THROWS_AS(lorenz_curve(std::vector<std::int64_t>{0, 0}),
                    ValidationError);
}

TEST_CASE("gini unit values are exact") {
    CHECK(gini(std::vector<std::int64_t>{5, 5, 5, 5}) == 0.0);
    CHECK(gini(std::vector<std::int64_t>{10, 0, 0, 0}) == 0.75);
    CHECK(gini(std::vector<std::int64_t>{3, 1}) == 0.25);
}

TEST_CASE("gini invariances and bounds") {
    RngStream rng(404, 0);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(10));
        std::vector<std::int64_t> counts(n);
        std::int64_t total = 0;
        for (auto& c : counts) {
            c = rng.uniform_int(50);
            total += c;
        }
        if (total == 0) {
            counts[0] = 1;
        }
        double g = gini(counts);
        CHECK(g >= -1e-12);
        CHECK(g <= static_cast<double>(n - 1) / static_cast<double>(n) + 1e-12);

        // Permutation invariance.
        std::vector<std::int64_t> shuffled = counts;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(
                                           rng.uniform_int(
                                               static_cast<std::int64_t>(i)))]);
        }
        CHECK(gini(shuffled) == doctest::Approx(g).epsilon(1e-12));

        // Scale invariance.
        std::vector<std::int64_t> scaled = counts;
        for (auto& c : scaled) {
            c *= 7;
        }
        CHECK(gini(scaled) == doctest::Approx(g).epsilon(1e-12));

        // Lorenz curve below the diagonal, both coordinates non-decreasing.
        LorenzCurve curve = lorenz_curve(counts);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].first >= curve.points[i - 1].first);
            CHECK(curve.points[i].second >= curve.points[i - 1].second - 1e-15);
            CHECK(curve.points[i].second <= curve.points[i].first + 1e-12);
        }
    }
}

TEST_CASE("traffic-weighted gini") {
    TrafficGroup a{10, {5, 5}};          // gini 0
    TrafficGroup b{10, {7, 0}};          // gini 0.5
    std::vector<TrafficGroup> both{a, b};
    CHECK(traffic_weighted_gini(both) == doctest::Approx(0.25));

    std::vector<TrafficGroup> weighted{TrafficGroup{30, {5, 5}},
                                       TrafficGroup{10, {7, 0}}};
    CHECK(traffic_weighted_gini(weighted) == doctest::Approx(0.125));

    std::vector<TrafficGroup> one{b};
    CHECK(traffic_weighted_gini(one) ==
          doctest::Approx(gini(std::vector<std::int64_t>{7, 0})));

    CHECK_THROWS_AS(traffic_weighted_gini(std::vector<TrafficGroup>{}),
                    ValidationError);
}

TEST_CASE("grouping by eligible signature") {
    std::vector<LogRecord> logs;
    logs.push_back(quick_record(true, 1, {0, 2}, 0));
    logs.push_back(quick_record(true, 1, {2, 0}, 2));  // same signature
    logs.push_back(quick_record(true, 1, {1, 3}, 3));
    auto groups = group_by_eligible_signature(logs);
    REQUIRE(groups.size() == 2);
    const TrafficGroup& g02 = groups.at(std::vector<ActionId>{0, 2});
    CHECK(g02.traffic == 2);
    CHECK(g02.action_counts == std::vector<std::int64_t>{1, 1});
}

TEST_CASE("wilson interval pinned values") {
    ConfidenceInterval zero = wilson_interval(0, 10, 0.95);
    CHECK(zero.lo == 0.0);
    CHECK(std::abs(zero.hi - 0.27753) < 1e-5);
    // Closed form at k=0: hi = z^2/(n+z^2).
    const double z = 1.959964;
    CHECK(zero.hi == doctest::Approx(z * z / (10 + z * z)).epsilon(1e-12));

    ConfidenceInterval full = wilson_interval(10, 10, 0.95);
    CHECK(full.hi == 1.0);
    CHECK(full.lo == doctest::Approx(1.0 - zero.hi).epsilon(1e-12));

    ConfidenceInterval half = wilson_interval(50, 100, 0.95);
    CHECK(std::abs(half.lo - 0.40383) < 1e-5);
    CHECK(std::abs(half.hi - 0.59617) < 1e-5);
    CHECK(half.lo + half.hi == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(wilson_interval(-1, 10, 0.95), ValidationError);
    CHECK_THROWS_AS(wilson_interval(11, 10, 0.95), ValidationError);
    CHECK_THROWS_AS(wilson_interval(5, 10, 0.9), ConfigError);
}

TEST_CASE("wilson 75% interval nests inside the 95% interval") {
    RngStream rng(405, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::int64_t n = 1 + rng.uniform_int(500);
        std::int64_t k = rng.uniform_int(n + 1);
        ConfidenceInterval narrow = wilson_interval(k, n, 0.75);
        ConfidenceInterval wide = wilson_interval(k, n, 0.95);
        CHECK(narrow.lo >= wide.lo - 1e-15);
        CHECK(narrow.hi <= wide.hi + 1e-15);
    }
}

TEST_CASE("wilson coverage on Bernoulli(0.9) samples") {
    RngStream rng(406, 2);
    const int trials = 1000;
    const int n = 500;
    int covered = 0;
    for (int t = 0; t < trials; ++t) {
        std::int64_t k = 0;
        for (int i = 0; i < n; ++i) {
            k += rng.uniform() < 0.9 ? 1 : 0;
        }
        ConfidenceInterval ci = wilson_interval(k, n, 0.95);
        covered += (ci.lo <= 0.9 && 0.9 <= ci.hi) ? 1 : 0;
    }
    CHECK(static_cast<double>(covered) / trials >= 0.93);
}

TEST_CASE("uplift arithmetic and identity") {
    std::vector<LogRecord> base;
    std::vector<LogRecord> variant;
    for (int i = 0; i < 100; ++i) {
        base.push_back(quick_record(true, i < 50 ? 1 : 0, {0, 1}, 0));
        variant.push_back(quick_record(true, i < 55 ? 1 : 0, {0, 1}, 0));
    }
    UpliftResult same = uplift(base, base);
    CHECK(same.percent == 0.0);

    UpliftResult up = uplift(variant, base);
    CHECK(up.percent == doctest::Approx(10.0).epsilon(1e-9));

    std::vector<LogRecord> zeros(10, quick_record(true, 0, {0, 1}, 0));
    CHECK_THROWS_AS(uplift(variant, zeros), ValidationError);
}

TEST_CASE("report decomposition holds bit-exactly") {
    RngStream rng(407, 3);
    std::vector<LogRecord> logs;
    for (int i = 0; i < 997; ++i) {
        logs.push_back(quick_record(rng.uniform() < 0.93,
                                    rng.uniform() < 0.87 ? 1 : 0, {0, 1, 2},
                                    static_cast<ActionId>(rng.uniform_int(3))));
    }
    GenerationReport r = make_generation_report(logs);
    double recomposed = r.effective_exploration *
                            r.exploration_round_mean_reward +
                        (1.0 - r.effective_exploration) *
                            r.exploitation_round_mean_reward;
    CHECK(r.mean_reward == recomposed);
    CHECK(r.positive_rate == doctest::Approx(r.mean_reward).epsilon(1e-12));
    CHECK(r.ci75.lo >= r.ci95.lo);
    CHECK(r.ci75.hi <= r.ci95.hi);

    // All-greedy logs: exploration side empty, mean equals exploit mean.
    std::vector<LogRecord> greedy_only(
        50, quick_record(true, 1, {0, 1}, 0));
    GenerationReport g = make_generation_report(greedy_only);
    CHECK(g.effective_exploration == 0.0);
    CHECK(g.mean_reward == g.exploitation_round_mean_reward);
}

}  // TEST_SUITE
