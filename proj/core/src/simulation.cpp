#include "banditlab/simulation.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "banditlab/errors.hpp"
#include "banditlab/harness.hpp"
#include "banditlab/log_codec.hpp"

namespace banditlab {

namespace {

constexpr std::uint64_t kBootstrapStream = 0x67656e30;  // "gen0"

// Per-arm stream ids derive from the label, so identical arm specs replay
// identically while distinct arms draw independent streams.
std::uint64_t arm_train_stream(const std::string& label, std::int32_t gen) {
    return fnv1a64(label) ^ static_cast<std::uint64_t>(2 * gen);
}

std::uint64_t arm_env_stream(const std::string& label, std::int32_t gen) {
    return fnv1a64(label) ^ static_cast<std::uint64_t>(2 * gen + 1);
}

}  // namespace

std::vector<LogRecord> bootstrap_gen0(const Environment& env, std::int64_t n,
                                      RngStream& rng, RiskStats& stats) {
    if (n < 1) {
        throw ConfigError("bootstrap_n must be >= 1");
    }
    std::vector<LogRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) {
        Context ctx = gen_context(env.cfg, rng);
        ActionSet set = eligible_actions(ctx, stats, env.rules, env.cfg);
        ActionDistribution dist = uniform_distribution(set.eligible);
        SampleResult pick = sample_action(dist, rng);
        double p = true_reward_prob(ctx, pick.action, env.hidden);

        LogRecord r;
        r.generation = 0;
        r.round = t;
        r.context = std::move(ctx);
        r.eligible = std::move(set.eligible);
        r.chosen = pick.action;
        r.propensity = pick.propensity;
        r.reward = draw_reward(p, rng);
        r.was_greedy = pick.was_greedy;
        update_risk_stats(stats, r);
        records.push_back(std::move(r));
    }
    return records;
}

GenerationRun run_generation(const PolicyConfig& policy, const Oracle& oracle,
                             const Environment& env, RiskStats& stats,
                             std::int64_t rounds, RngStream& rng,
                             std::int32_t generation_index) {
    if (rounds < 1) {
        throw ConfigError("rounds must be >= 1");
    }
    if (oracle_schema_fp(oracle) != env.schema.fingerprint()) {
        throw SchemaError("oracle schema does not match the environment");
    }

    GenerationRun run;
    run.records.reserve(static_cast<std::size_t>(rounds));
    std::vector<double> scratch(static_cast<std::size_t>(env.schema.dim()));

    // Dispatch on the oracle type once, outside the round loop.
    std::visit(
        [&](const auto& oracle_impl) {
            PredictionVector preds;
            for (std::int64_t t = 0; t < rounds; ++t) {
                Context ctx = gen_context(env.cfg, rng);
                ActionSet set =
                    eligible_actions(ctx, stats, env.rules, env.cfg);
                preds.by_action.clear();
                for (ActionId a : set.eligible) {
                    env.schema.featurize_into(ctx, a, scratch);
                    preds.by_action.emplace_back(
                        a, oracle_impl.predict_values(scratch));
                }
                ActionDistribution dist = policy_distribution(policy, preds);
                SampleResult pick = sample_action(dist, rng);
                double p = true_reward_prob(ctx, pick.action, env.hidden);

                LogRecord r;
                r.generation = generation_index;
                r.round = t;
                r.context = std::move(ctx);
                r.eligible = std::move(set.eligible);
                r.chosen = pick.action;
                r.propensity = pick.propensity;
                r.reward = draw_reward(p, rng);
                r.was_greedy = pick.was_greedy;
                update_risk_stats(stats, r);
                run.records.push_back(std::move(r));
            }
        },
        oracle);

    run.report = make_generation_report(run.records);
    return run;
}

std::vector<const LogRecord*> training_window_view(
    const std::vector<std::vector<LogRecord>>& generations,
    TrainingWindow window, std::int32_t next_generation) {
    if (next_generation < 1 ||
        static_cast<std::size_t>(next_generation) > generations.size()) {
        throw ConfigError("training window: generation index out of range");
    }
    std::vector<const LogRecord*> view;
    const std::size_t first =
        window == TrainingWindow::AllPast
            ? 0
            : static_cast<std::size_t>(next_generation) - 1;
    for (std::size_t g = first;
         g < static_cast<std::size_t>(next_generation); ++g) {
        for (const LogRecord& r : generations[g]) {
            view.push_back(&r);
        }
    }
    return view;
}

Dataset build_training_dataset(std::span<const LogRecord* const> records,
                               const FeatureSchema& schema) {
    if (records.empty()) {
        throw ConfigError("empty training window");
    }
    Dataset data(schema.fingerprint(), schema.dim());
    data.reserve(records.size());
    std::vector<double> scratch(static_cast<std::size_t>(schema.dim()));
    for (const LogRecord* r : records) {
        schema.featurize_into(r->context, r->chosen, scratch);
        data.add_row(scratch, r->reward);
    }
    return data;
}

Oracle train_oracle(const Dataset& data, const TrainConfig& cfg) {
    if (cfg.kind == OracleKind::Logistic) {
        return train_logistic(data, cfg);
    }
    return train_trees(data, cfg);
}

namespace {

struct ArmContext {
    const ExperimentConfig* cfg;
    const Environment* env;
    const std::vector<LogRecord>* gen0;
    const GenerationReport* gen0_report;
    const RiskStats* stats_after_gen0;
};

ArmResult run_arm(const ArmContext& shared, std::int32_t arm_index) {
    const ExperimentConfig& cfg = *shared.cfg;
    const Environment& env = *shared.env;
    const GenerationSpec& spec =
        cfg.arms[static_cast<std::size_t>(arm_index)];

    ArmResult result;
    result.label = spec.label;
    result.arm_index = arm_index;
    result.dir = cfg.output_dir /
                 ("arm" + std::to_string(arm_index) + "_" + spec.label);
    std::filesystem::create_directories(result.dir);

    const LogHeader header{env.schema.fingerprint(), cfg.env.hash()};

    // Generation 0 is the shared bootstrap.
    std::vector<std::vector<LogRecord>> generations;
    generations.push_back(*shared.gen0);
    result.reports.push_back(*shared.gen0_report);
    {
        auto path = result.dir / "gen0.log";
        write_log_file(path, header, generations[0]);
        result.log_paths.push_back(path);
    }

    RiskStats stats = *shared.stats_after_gen0;
    for (std::int32_t g = 1; g <= spec.generations; ++g) {
        auto window = training_window_view(generations, spec.window, g);
        Dataset data = build_training_dataset(window, env.schema);
        TrainConfig train_cfg = spec.oracle_cfg;
        if (train_cfg.seed == 0) {
            train_cfg.seed = cfg.seed;
        }
        train_cfg.stream_id = arm_train_stream(spec.label, g);
        Oracle oracle = train_oracle(data, train_cfg);
        save_oracle(oracle, env.schema,
                    result.dir / ("oracle_gen" + std::to_string(g) + ".json"));

        RngStream rng(cfg.seed, arm_env_stream(spec.label, g));
        GenerationRun run = run_generation(spec.policy, oracle, env, stats,
                                           spec.rounds_per_generation, rng, g);
        auto path = result.dir / ("gen" + std::to_string(g) + ".log");
        write_log_file(path, header, run.records);
        result.log_paths.push_back(path);
        result.reports.push_back(run.report);
        generations.push_back(std::move(run.records));
    }

    write_arm_report(result.dir / "report.json", result.reports);
    return result;
}

}  // namespace

std::vector<ArmResult> run_experiment(const ExperimentConfig& cfg,
                                      int workers) {
    cfg.validate();
    if (workers < 1) {
        throw ConfigError("workers must be >= 1");
    }
    Environment env = Environment::build(cfg.env);
    std::filesystem::create_directories(cfg.output_dir);

    RngStream bootstrap_rng(cfg.seed, kBootstrapStream);
    RiskStats stats;
    std::vector<LogRecord> gen0 =
        bootstrap_gen0(env, cfg.bootstrap_n, bootstrap_rng, stats);
    GenerationReport gen0_report = make_generation_report(gen0);

    ArmContext shared{&cfg, &env, &gen0, &gen0_report, &stats};
    std::vector<ArmResult> results(cfg.arms.size());

    const int thread_count =
        std::min<int>(workers, static_cast<int>(cfg.arms.size()));
    if (thread_count <= 1) {
        for (std::size_t i = 0; i < cfg.arms.size(); ++i) {
            results[i] = run_arm(shared, static_cast<std::int32_t>(i));
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= cfg.arms.size()) {
                    return;
                }
                try {
                    results[i] = run_arm(shared, static_cast<std::int32_t>(i));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(thread_count));
        for (int i = 0; i < thread_count; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    write_comparison_report(cfg.output_dir / "comparison.json", cfg, results);
    return results;
}

double match_squarecb_gamma(const Environment& env, const Oracle& oracle,
                            const RiskStats& stats, double target_exploration,
                            std::int64_t probe_rounds, std::uint64_t seed,
                            double tolerance) {
    if (!(target_exploration > 0.0) || !(target_exploration < 1.0)) {
        throw ConfigError("target exploration must lie in (0,1)");
    }
    auto measure = [&](double gamma) {
        PolicyConfig policy;
        policy.kind = PolicyKind::SquareCb;
        policy.gamma = gamma;
        RiskStats probe_stats = stats;
        RngStream rng(seed, 0x6d617463);  // same stream for every probe
        GenerationRun run = run_generation(policy, oracle, env, probe_stats,
                                           probe_rounds, rng, 1);
        return run.report.effective_exploration;
    };

    // Exploration decreases in gamma; bisect on log10(gamma).
    double lo = 0.0;   // log10 gamma, explores a lot
    double hi = 7.0;   // explores almost never
    double best_gamma = std::pow(10.0, 0.5 * (lo + hi));
    double best_err = 1.0;
    for (int iter = 0; iter < 24; ++iter) {
        double mid = 0.5 * (lo + hi);
        double gamma = std::pow(10.0, mid);
        double measured = measure(gamma);
        double err = std::abs(measured - target_exploration);
        if (err < best_err) {
            best_err = err;
            best_gamma = gamma;
        }
        if (err <= 0.25 * tolerance) {
            break;
        }
        if (measured > target_exploration) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best_err > tolerance) {
        throw ConfigError("match_squarecb_gamma: could not match target " +
                          std::to_string(target_exploration) + " (best err " +
                          std::to_string(best_err) + ")");
    }
    return best_gamma;
}

}  // namespace banditlab
