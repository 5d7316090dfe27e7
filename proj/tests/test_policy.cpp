#include <doctest.h>

#include <cmath>
#include <vector>

#include "banditlab/errors.hpp"
#include "banditlab/policy.hpp"
#include "banditlab/rng.hpp"

using namespace banditlab;

namespace {

PredictionVector preds_of(std::vector<std::pair<ActionId, double>> entries) {
    PredictionVector p;
    p.by_action = std::move(entries);
    return p;
}

PredictionVector random_preds(RngStream& rng, std::int64_t min_size = 2,
                              std::int64_t max_size = 15) {
    std::int64_t n = min_size + rng.uniform_int(max_size - min_size + 1);
    PredictionVector p;
    ActionId id = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        id += static_cast<ActionId>(1 + rng.uniform_int(3));
        p.by_action.emplace_back(id, rng.uniform());
    }
    return p;
}

double prob_of(const ActionDistribution& dist, ActionId id) {
    for (const auto& [a, p] : dist.probs) {
        if (a == id) {
            return p;
        }
    }
    FAIL("action not in distribution");
    return 0.0;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("greedy argmax, tie to lowest id, singleton") {
    CHECK(greedy_action(preds_of({{0, 0.9}, {1, 0.7}})) == 0);
    CHECK(greedy_action(preds_of({{3, 0.5}, {1, 0.5}})) == 1);
    CHECK(greedy_action(preds_of({{7, 0.2}})) == 7);
    CHECK_THROWS_AS(greedy_action(PredictionVector{}), ValidationError);
}

TEST_CASE("epsilon-greedy closed forms") {
    auto p = preds_of({{0, 0.8}, {1, 0.6}, {2, 0.4}, {3, 0.2}});

    ActionDistribution d0 = epsilon_greedy_distribution(p, 0.0);
    CHECK(prob_of(d0, 0) == 1.0);
    CHECK(prob_of(d0, 1) == 0.0);

    ActionDistribution d1 = epsilon_greedy_distribution(p, 1.0);
    for (ActionId a : {0, 1, 2, 3}) {
        CHECK(prob_of(d1, a) == doctest::Approx(0.25).epsilon(1e-12));
    }

    ActionDistribution d = epsilon_greedy_distribution(p, 0.1);
    CHECK(prob_of(d, 0) == doctest::Approx(0.925).epsilon(1e-12));
    CHECK(prob_of(d, 1) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(prob_of(d, 2) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(prob_of(d, 3) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(d.greedy_id == 0);

    CHECK_THROWS_AS(epsilon_greedy_distribution(p, -0.1), ValidationError);
    CHECK_THROWS_AS(epsilon_greedy_distribution(p, 1.1), ValidationError);
}

TEST_CASE("squarecb hand-computed cases") {
    ActionDistribution two =
        squarecb_distribution(preds_of({{0, 0.9}, {1, 0.7}}), 10.0);
    CHECK(prob_of(two, 1) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(prob_of(two, 0) == doctest::Approx(0.75).epsilon(1e-9));

    ActionDistribution three = squarecb_distribution(
        preds_of({{0, 0.9}, {1, 0.8}, {2, 0.5}}), 20.0);
    CHECK(prob_of(three, 1) == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(prob_of(three, 2) ==
          doctest::Approx(0.09090909090909091).epsilon(1e-9));
    CHECK(prob_of(three, 0) ==
          doctest::Approx(0.7090909090909091).epsilon(1e-9));

    CHECK_THROWS_AS(squarecb_distribution(three.probs.empty()
                                              ? PredictionVector{}
                                              : preds_of({{0, 0.5}}),
                                          0.0),
                    ValidationError);
    CHECK_THROWS_AS(squarecb_distribution(preds_of({{0, 0.5}}), -1.0),
                    ValidationError);
}

TEST_CASE("squarecb equal predictions give the uniform distribution") {
    auto p = preds_of({{0, 0.4}, {2, 0.4}, {5, 0.4}, {9, 0.4}});
    for (double gamma : {0.1, 10.0, 1e6}) {
        ActionDistribution d = squarecb_distribution(p, gamma);
        for (const auto& [a, prob] : d.probs) {
            (void)a;
            CHECK(prob == doctest::Approx(0.25).epsilon(1e-12));
        }
    }
}

TEST_CASE("squarecb distribution invariants on random vectors") {
    RngStream rng(555, 0);
    for (int trial = 0; trial < 2000; ++trial) {
        PredictionVector p = random_preds(rng);
        double gamma = std::pow(10.0, -1.0 + 5.0 * rng.uniform());
        ActionDistribution d = squarecb_distribution(p, gamma);
        const double inv_n = 1.0 / static_cast<double>(d.probs.size());

        double sum = 0.0;
        double greedy_prob = 0.0;
        for (const auto& [a, prob] : d.probs) {
            CHECK(prob >= 0.0);
            sum += prob;
            if (a == d.greedy_id) {
                greedy_prob = prob;
            } else {
                CHECK(prob <= inv_n);
            }
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        CHECK(greedy_prob >= inv_n - 1e-12);

        // Gap monotonicity: smaller gap -> larger probability.
        double greedy_score = 0.0;
        for (const auto& [a, score] : p.by_action) {
            if (a == d.greedy_id) {
                greedy_score = score;
            }
        }
        for (const auto& [a1, s1] : p.by_action) {
            for (const auto& [a2, s2] : p.by_action) {
                if (a1 == d.greedy_id || a2 == d.greedy_id) {
                    continue;
                }
                double gap1 = greedy_score - s1;
                double gap2 = greedy_score - s2;
                if (gap1 < gap2) {
                    CHECK(prob_of(d, a1) >= prob_of(d, a2));
                }
            }
        }
    }
}

TEST_CASE("squarecb converges to uniform as gamma shrinks") {
    RngStream rng(99, 1);
    for (int trial = 0; trial < 50; ++trial) {
        PredictionVector p = random_preds(rng);
        const double inv_n = 1.0 / static_cast<double>(p.by_action.size());
        double previous = 1.0;
        for (double gamma : {1e4, 1e3, 1e2, 1e1, 1.0, 1e-1, 1e-2, 1e-3}) {
            ActionDistribution d = squarecb_distribution(p, gamma);
            double dev = 0.0;
            for (const auto& [a, prob] : d.probs) {
                (void)a;
                dev = std::max(dev, std::abs(prob - inv_n));
            }
            CHECK(dev <= previous + 1e-12);
            previous = dev;
        }
        CHECK(previous < 1e-3);
    }
}

TEST_CASE("squarecb probabilities are shift-invariant, argmax scale-invariant") {
    RngStream rng(77, 2);
    for (int trial = 0; trial < 200; ++trial) {
        PredictionVector p = random_preds(rng);
        // Keep predictions in [0,1] after the shift.
        for (auto& [a, s] : p.by_action) {
            (void)a;
            s *= 0.5;
        }
        double gamma = 1.0 + 50.0 * rng.uniform();
        ActionDistribution base = squarecb_distribution(p, gamma);

        PredictionVector shifted = p;
        for (auto& [a, s] : shifted.by_action) {
            (void)a;
            s += 0.25;
        }
        ActionDistribution moved = squarecb_distribution(shifted, gamma);
        for (std::size_t i = 0; i < base.probs.size(); ++i) {
            CHECK(moved.probs[i].second ==
                  doctest::Approx(base.probs[i].second).epsilon(1e-9));
        }

        PredictionVector scaled = p;
        for (auto& [a, s] : scaled.by_action) {
            (void)a;
            s *= 1.7;
        }
        CHECK(greedy_action(scaled) == base.greedy_id);
    }
}

TEST_CASE("sample_action: point mass, concentration, determinism") {
    ActionDistribution point;
    point.probs = {{4, 1.0}, {9, 0.0}};
    point.greedy_id = 4;
    RngStream rng(1, 1);
    for (int i = 0; i < 100; ++i) {
        SampleResult s = sample_action(point, rng);
        CHECK(s.action == 4);
        CHECK(s.propensity == 1.0);
        CHECK(s.was_greedy);
    }

    ActionDistribution dist;
    dist.probs = {{0, 0.75}, {1, 0.25}};
    dist.greedy_id = 0;
    RngStream draws(2024, 7);
    std::int64_t ones = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        SampleResult s = sample_action(dist, draws);
        ones += s.action == 1 ? 1 : 0;
        if (s.action == 1) {
            CHECK(s.propensity == 0.25);
            CHECK(!s.was_greedy);
        }
    }
    double freq = static_cast<double>(ones) / n;
    double sigma = std::sqrt(0.25 * 0.75 / n);
    CHECK(std::abs(freq - 0.25) < 3.0 * sigma);

    RngStream a(5, 5);
    RngStream b(5, 5);
    for (int i = 0; i < 1000; ++i) {
        CHECK(sample_action(dist, a).action == sample_action(dist, b).action);
    }
}

TEST_CASE("epsilon-greedy sampling hits the effective exploration law") {
    auto p = preds_of({{0, 0.9}, {1, 0.5}, {2, 0.4}, {3, 0.1}});
    const double epsilon = 0.3;
    ActionDistribution d = epsilon_greedy_distribution(p, epsilon);
    RngStream rng(31337, 0);
    const int n = 100000;
    std::int64_t nongreedy = 0;
    for (int i = 0; i < n; ++i) {
        nongreedy += sample_action(d, rng).was_greedy ? 0 : 1;
    }
    double expect = epsilon * (1.0 - 1.0 / 4.0);  // 0.225
    double sigma = std::sqrt(expect * (1.0 - expect) / n);
    CHECK(std::abs(static_cast<double>(nongreedy) / n - expect) <
          3.0 * sigma);
}

TEST_CASE("uniform distribution for bootstrap logging") {
    std::vector<ActionId> eligible{3, 1, 8};
    ActionDistribution d = uniform_distribution(eligible);
    CHECK(d.greedy_id == 1);
    for (const auto& [a, prob] : d.probs) {
        (void)a;
        CHECK(prob == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("prediction vector validation") {
    CHECK_THROWS_AS(
        squarecb_distribution(preds_of({{0, 0.5}, {0, 0.6}}), 1.0),
        ValidationError);
    CHECK_THROWS_AS(
        epsilon_greedy_distribution(preds_of({{0, 1.5}}), 0.1),
        ValidationError);
}

}  // TEST_SUITE
