#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "banditlab/errors.hpp"
#include "banditlab/harness.hpp"
#include "banditlab/log_codec.hpp"
#include "banditlab/simulation.hpp"

using namespace banditlab;

namespace {

EnvConfig small_env() {
    EnvConfig cfg;
    cfg.countries = 3;
    cfg.merchants = 4;
    cfg.mccs = 2;
    cfg.devices = 2;
    cfg.extra_numeric_dim = 1;
    cfg.a_max = 5;
    cfg.rule_density = 0.6;
    return cfg;
}

EnvConfig two_action_env() {
    EnvConfig cfg = small_env();
    cfg.a_max = 2;
    cfg.rule_density = 1.0;  // every row keeps both actions
    return cfg;
}

Oracle quick_oracle(const Environment& env, std::int64_t n,
                    std::uint64_t seed) {
    RngStream rng(seed, 1);
    RiskStats stats;
    std::vector<LogRecord> logs = bootstrap_gen0(env, n, rng, stats);
    std::vector<const LogRecord*> view;
    for (const LogRecord& r : logs) {
        view.push_back(&r);
    }
    Dataset data = build_training_dataset(view, env.schema);
    TrainConfig cfg;
    cfg.kind = OracleKind::Logistic;
    cfg.rounds = 8;
    cfg.step = 0.3;
    cfg.batch_size = 64;
    cfg.seed = seed;
    return train_logistic(data, cfg);
}

std::string records_string(std::span<const LogRecord> records) {
    std::string s;
    for (const LogRecord& r : records) {
        s += encode_log(r);
        s += '\n';
    }
    return s;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("bootstrap: uniform propensity, determinism, risk stats filled") {
    Environment env = Environment::build(small_env());
    RngStream rng1(42, 0);
    RngStream rng2(42, 0);
    RiskStats stats1;
    RiskStats stats2;
    auto logs1 = bootstrap_gen0(env, 3000, rng1, stats1);
    auto logs2 = bootstrap_gen0(env, 3000, rng2, stats2);
    REQUIRE(logs1.size() == 3000);
    CHECK(logs1 == logs2);
    CHECK(stats1.size() > 0);
    for (const LogRecord& r : logs1) {
        CHECK(r.generation == 0);
        CHECK(r.propensity ==
              1.0 / static_cast<double>(r.eligible.size()));
    }
}

TEST_CASE("bootstrap action choice is uniform within a fixed eligible set") {
    Environment env = Environment::build(two_action_env());
    RngStream rng(7, 0);
    RiskStats stats;
    auto logs = bootstrap_gen0(env, 100000, rng, stats);
    std::int64_t zeros = 0;
    for (const LogRecord& r : logs) {
        REQUIRE(r.eligible.size() == 2);
        zeros += r.chosen == 0 ? 1 : 0;
    }
    double freq = static_cast<double>(zeros) / static_cast<double>(logs.size());
    double sigma = std::sqrt(0.25 / static_cast<double>(logs.size()));
    CHECK(std::abs(freq - 0.5) < 3.0 * sigma);
}

TEST_CASE("greedy generation: all greedy, propensity one") {
    Environment env = Environment::build(small_env());
    Oracle oracle = quick_oracle(env, 4000, 11);
    RiskStats stats;
    RngStream rng(12, 3);
    PolicyConfig greedy;
    greedy.kind = PolicyKind::Greedy;
    GenerationRun run = run_generation(greedy, oracle, env, stats, 2000, rng, 1);
    REQUIRE(run.records.size() == 2000);
    for (const LogRecord& r : run.records) {
        CHECK(r.was_greedy);
        CHECK(r.propensity == 1.0);
        CHECK(r.generation == 1);
    }
    CHECK(run.report.effective_exploration == 0.0);
}

TEST_CASE("epsilon=1 on a two-action environment explores half the rounds") {
    Environment env = Environment::build(two_action_env());
    Oracle oracle = quick_oracle(env, 4000, 13);
    RiskStats stats;
    RngStream rng(14, 5);
    PolicyConfig explore;
    explore.kind = PolicyKind::EpsilonGreedy;
    explore.epsilon = 1.0;
    const std::int64_t rounds = 100000;
    GenerationRun run =
        run_generation(explore, oracle, env, stats, rounds, rng, 1);
    double sigma = std::sqrt(0.25 / static_cast<double>(rounds));
    CHECK(std::abs(run.report.effective_exploration - 0.5) < 3.0 * sigma);
}

TEST_CASE("generation logs replay byte-identically under one seed") {
    Environment env = Environment::build(small_env());
    Oracle oracle = quick_oracle(env, 4000, 21);
    PolicyConfig policy;
    policy.kind = PolicyKind::SquareCb;
    policy.gamma = 30.0;

    RiskStats stats1;
    RngStream rng1(100, 9);
    GenerationRun a = run_generation(policy, oracle, env, stats1, 3000, rng1, 1);
    RiskStats stats2;
    RngStream rng2(100, 9);
    GenerationRun b = run_generation(policy, oracle, env, stats2, 3000, rng2, 1);
    CHECK(records_string(a.records) == records_string(b.records));
}

TEST_CASE("frozen oracle: identical predictions at round 1 and round T") {
    Environment env = Environment::build(small_env());
    Oracle oracle = quick_oracle(env, 4000, 31);
    RngStream probe_rng(15, 2);
    Context probe = gen_context(env.cfg, probe_rng);
    FeatureVector fv = env.schema.featurize(probe, 0);
    double before = predict(oracle, fv);

    RiskStats stats;
    RngStream rng(16, 2);
    PolicyConfig policy;
    policy.kind = PolicyKind::EpsilonGreedy;
    policy.epsilon = 0.2;
    run_generation(policy, oracle, env, stats, 5000, rng, 1);
    CHECK(predict(oracle, fv) == before);
}

TEST_CASE("training window semantics") {
    std::vector<std::vector<LogRecord>> generations;
    generations.emplace_back(500);  // gen 0
    generations.emplace_back(400);  // gen 1
    generations.emplace_back(300);  // gen 2

    CHECK(training_window_view(generations, TrainingWindow::LatestOnly, 1)
              .size() == 500);
    CHECK(training_window_view(generations, TrainingWindow::LatestOnly, 2)
              .size() == 400);
    CHECK(training_window_view(generations, TrainingWindow::LatestOnly, 3)
              .size() == 300);
    CHECK(training_window_view(generations, TrainingWindow::AllPast, 3)
              .size() == 1200);
    CHECK_THROWS_AS(
        training_window_view(generations, TrainingWindow::LatestOnly, 0),
        ConfigError);
}

TEST_CASE("run_experiment: identical arms give identical artifacts") {
    auto dir = std::filesystem::temp_directory_path() /
               "banditlab_sim_identical";
    std::filesystem::remove_all(dir);

    ExperimentConfig cfg;
    cfg.env = small_env();
    cfg.seed = 2024;
    cfg.output_dir = dir;
    cfg.bootstrap_n = 2000;
    GenerationSpec arm;
    arm.label = "mirror";
    arm.rounds_per_generation = 1500;
    arm.generations = 1;
    arm.policy.kind = PolicyKind::EpsilonGreedy;
    arm.policy.epsilon = 0.1;
    arm.oracle_cfg.kind = OracleKind::Logistic;
    arm.oracle_cfg.rounds = 5;
    cfg.arms = {arm, arm};

    auto results = run_experiment(cfg, 2);
    REQUIRE(results.size() == 2);
    CHECK(slurp(results[0].dir / "gen1.log") ==
          slurp(results[1].dir / "gen1.log"));
    CHECK(slurp(results[0].dir / "report.json") ==
          slurp(results[1].dir / "report.json"));
    CHECK(slurp(results[0].dir / "gen0.log") ==
          slurp(results[1].dir / "gen0.log"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment: log completeness and replayable reports") {
    auto dir = std::filesystem::temp_directory_path() /
               "banditlab_sim_replay";
    std::filesystem::remove_all(dir);

    ExperimentConfig cfg;
    cfg.env = small_env();
    cfg.seed = 77;
    cfg.output_dir = dir;
    cfg.bootstrap_n = 1200;
    GenerationSpec arm;
    arm.label = "sq";
    arm.rounds_per_generation = 900;
    arm.generations = 2;
    arm.policy.kind = PolicyKind::SquareCb;
    arm.policy.gamma = 25.0;
    arm.oracle_cfg.kind = OracleKind::Logistic;
    arm.oracle_cfg.rounds = 5;
    cfg.arms = {arm};

    auto results = run_experiment(cfg, 1);
    REQUIRE(results.size() == 1);
    const ArmResult& r = results[0];
    REQUIRE(r.log_paths.size() == 3);  // gen0 + 2 generations
    REQUIRE(r.reports.size() == 3);

    std::vector<GenerationReport> recomputed;
    for (std::size_t g = 0; g < r.log_paths.size(); ++g) {
        LogFile file = read_log_file(r.log_paths[g]);
        if (g > 0) {
            CHECK(file.records.size() == 900);
        } else {
            CHECK(file.records.size() == 1200);
        }
        for (std::size_t t = 0; t < file.records.size(); ++t) {
            CHECK(file.records[t].generation ==
                  static_cast<std::int32_t>(g));
            CHECK(file.records[t].round == static_cast<std::int64_t>(t));
        }
        CHECK(file.header.schema_fp ==
              Environment::build(cfg.env).schema.fingerprint());
        recomputed.push_back(make_generation_report(file.records));
    }
    CHECK(arm_report_string(recomputed) == slurp(r.dir / "report.json"));
    CHECK(std::filesystem::exists(r.dir / "oracle_gen1.json"));
    CHECK(std::filesystem::exists(r.dir / "oracle_gen2.json"));
    CHECK(std::filesystem::exists(dir / "comparison.json"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("gamma matching hits a target exploration rate") {
    Environment env = Environment::build(small_env());
    Oracle oracle = quick_oracle(env, 6000, 55);
    RiskStats stats;
    // Fill stats the way a bootstrap would.
    RngStream rng(56, 0);
    bootstrap_gen0(env, 6000, rng, stats);

    const double target = 0.05;
    double gamma = match_squarecb_gamma(env, oracle, stats, target, 40000,
                                        777, 0.002);
    PolicyConfig policy;
    policy.kind = PolicyKind::SquareCb;
    policy.gamma = gamma;
    RiskStats fresh = stats;
    RngStream run_rng(777, 0x6d617463);
    GenerationRun run =
        run_generation(policy, oracle, env, fresh, 40000, run_rng, 1);
    CHECK(std::abs(run.report.effective_exploration - target) <= 0.004);
}

}  // TEST_SUITE
