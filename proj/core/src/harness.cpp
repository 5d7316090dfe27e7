#include "banditlab/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "banditlab/errors.hpp"
#include "banditlab/log_codec.hpp"
#include "banditlab/offline_eval.hpp"
#include "banditlab/simulation.hpp"

namespace banditlab {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::uint64_t kTuneBootstrapStream = 0x74756e30;
constexpr std::uint64_t kTuneTrainStream = 0x74756e31;
constexpr std::uint64_t kTuneRunStream = 0x74756e32;
constexpr int kHistogramBins = 20;

ojson interval_json(const ConfidenceInterval& ci) {
    return ojson::array({ci.lo, ci.hi});
}

ojson report_json(const GenerationReport& report, std::int32_t gen) {
    ojson j;
    j["gen"] = gen;
    j["rounds"] = report.rounds;
    j["mean_reward"] = report.mean_reward;
    j["exploration_round_mean_reward"] = report.exploration_round_mean_reward;
    j["exploitation_round_mean_reward"] =
        report.exploitation_round_mean_reward;
    j["effective_exploration"] = report.effective_exploration;
    ojson by_size = ojson::object();
    for (const auto& [size, rate] : report.exploration_by_size) {
        by_size[std::to_string(size)] = rate;
    }
    j["exploration_by_size"] = std::move(by_size);
    j["positive_rate"] = report.positive_rate;
    j["gini_weighted"] = report.gini_weighted;
    j["ci75"] = interval_json(report.ci75);
    j["ci95"] = interval_json(report.ci95);
    return j;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open for writing: " + path.string());
    }
    out << text;
    if (!out) {
        throw ConfigError("write failed: " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

std::filesystem::path apply_output_override(std::filesystem::path configured) {
    if (const char* override_dir = std::getenv("BANDITLAB_OUTPUT")) {
        if (override_dir[0] != '\0') {
            return std::filesystem::path(override_dir);
        }
    }
    return configured;
}

}  // namespace

std::string arm_report_string(std::span<const GenerationReport> reports) {
    ojson arr = ojson::array();
    for (std::size_t g = 0; g < reports.size(); ++g) {
        arr.push_back(report_json(reports[g], static_cast<std::int32_t>(g)));
    }
    return arr.dump(2) + "\n";
}

void write_arm_report(const std::filesystem::path& path,
                      std::span<const GenerationReport> reports) {
    write_text_file(path, arm_report_string(reports));
}

std::string comparison_report_string(const ExperimentConfig& cfg,
                                     std::span<const ArmResult> results) {
    ojson arms = ojson::array();
    for (const ArmResult& arm : results) {
        const GenerationSpec& spec =
            cfg.arms[static_cast<std::size_t>(arm.arm_index)];
        ojson a;
        a["label"] = arm.label;
        a["policy"] = policy_spec_string(spec.policy);
        ojson gens = ojson::array();
        for (std::size_t g = 0; g < arm.reports.size(); ++g) {
            const GenerationReport& r = arm.reports[g];
            ojson gj;
            gj["gen"] = static_cast<std::int32_t>(g);
            gj["mean_reward"] = r.mean_reward;
            // Nominal rate of the logging policy for this generation;
            // generation 0 is uniform logging and SquareCB has none.
            if (g == 0 || !spec.policy.has_nominal_exploration()) {
                gj["exploration_rate"] = nullptr;
            } else {
                gj["exploration_rate"] = spec.policy.nominal_exploration();
            }
            gj["effective_exploration"] = r.effective_exploration;
            gj["positive_rate"] = r.positive_rate;
            gj["gini"] = r.gini_weighted;
            gj["ci75"] = interval_json(r.ci75);
            gj["ci95"] = interval_json(r.ci95);
            gens.push_back(std::move(gj));
        }
        a["generations"] = std::move(gens);
        arms.push_back(std::move(a));
    }
    ojson j;
    j["arms"] = std::move(arms);
    return j.dump(2) + "\n";
}

void write_comparison_report(const std::filesystem::path& path,
                             const ExperimentConfig& cfg,
                             std::span<const ArmResult> results) {
    write_text_file(path, comparison_report_string(cfg, results));
}

int cmd_simulate(const std::filesystem::path& config_path, int workers,
                 std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        ExperimentConfig cfg = load_experiment_config(config_path);
        cfg.output_dir = apply_output_override(cfg.output_dir);
        std::filesystem::create_directories(cfg.output_dir);
        const auto marker = cfg.output_dir / kPartialMarker;
        write_text_file(marker, "incomplete\n");

        std::vector<ArmResult> results = run_experiment(cfg, workers);
        std::filesystem::remove(marker);

        for (const ArmResult& arm : results) {
            for (std::size_t g = 0; g < arm.reports.size(); ++g) {
                const GenerationReport& r = arm.reports[g];
                char line[160];
                std::snprintf(line, sizeof(line),
                              "%-20s gen %zu  reward %.5f  explore %.4f  "
                              "gini %.5f  pos %.5f",
                              arm.label.c_str(), g, r.mean_reward,
                              r.effective_exploration, r.gini_weighted,
                              r.positive_rate);
                out << line << '\n';
            }
        }
        out << "artifacts: " << cfg.output_dir.string() << '\n';
        return kExitOk;
    });
}

namespace {

struct Histogram {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;

    Histogram() : counts(kHistogramBins, 0) {}

    void add(double p) {
        int bin = std::min(kHistogramBins - 1,
                           static_cast<int>(p * kHistogramBins));
        counts[static_cast<std::size_t>(std::max(0, bin))] += 1;
        total += 1;
    }
};

// Predicted success probability of the action that was actually selected,
// recomputed from the logs.
Histogram selected_probability_histogram(std::span<const LogRecord> logs,
                                         const Oracle& oracle,
                                         const FeatureSchema& schema) {
    Histogram hist;
    std::vector<double> scratch(static_cast<std::size_t>(schema.dim()));
    for (const LogRecord& r : logs) {
        schema.featurize_into(r.context, r.chosen, scratch);
        hist.add(predict_values(oracle, scratch));
    }
    return hist;
}

std::string histogram_csv(const Histogram& hist, const std::string& label) {
    std::string csv = "label,bin_lo,bin_hi,count,share\n";
    for (int b = 0; b < kHistogramBins; ++b) {
        char row[128];
        std::snprintf(row, sizeof(row), "%s,%.2f,%.2f,%lld,%.9f\n",
                      label.c_str(),
                      static_cast<double>(b) / kHistogramBins,
                      static_cast<double>(b + 1) / kHistogramBins,
                      static_cast<long long>(
                          hist.counts[static_cast<std::size_t>(b)]),
                      static_cast<double>(
                          hist.counts[static_cast<std::size_t>(b)]) /
                          static_cast<double>(std::max<std::int64_t>(
                              1, hist.total)));
        csv += row;
    }
    return csv;
}

}  // namespace

int cmd_tune_gamma(const std::filesystem::path& config_path,
                   const std::vector<double>& gammas, std::ostream& out,
                   std::ostream& err) {
    return run_guarded(err, [&]() {
        if (gammas.empty()) {
            throw ConfigError("tune-gamma: empty gamma list");
        }
        for (double g : gammas) {
            if (!(g > 0.0)) {
                throw ConfigError("tune-gamma: gammas must be > 0");
            }
        }
        ExperimentConfig cfg = load_experiment_config(config_path);
        cfg.output_dir = apply_output_override(cfg.output_dir);
        std::filesystem::create_directories(cfg.output_dir);

        Environment env = Environment::build(cfg.env);
        RngStream bootstrap_rng(cfg.seed, kTuneBootstrapStream);
        RiskStats stats;
        std::vector<LogRecord> gen0 =
            bootstrap_gen0(env, cfg.bootstrap_n, bootstrap_rng, stats);

        const GenerationSpec& arm0 = cfg.arms.front();
        std::vector<const LogRecord*> window;
        window.reserve(gen0.size());
        for (const LogRecord& r : gen0) {
            window.push_back(&r);
        }
        Dataset data = build_training_dataset(window, env.schema);
        TrainConfig train_cfg = arm0.oracle_cfg;
        if (train_cfg.seed == 0) {
            train_cfg.seed = cfg.seed;
        }
        train_cfg.stream_id = kTuneTrainStream;
        Oracle oracle = train_oracle(data, train_cfg);

        const std::int64_t rounds = arm0.rounds_per_generation;
        // Same stream for the greedy reference and every gamma, so the
        // sweep sees identical contexts.
        auto simulate_policy = [&](const PolicyConfig& policy) {
            RiskStats run_stats = stats;
            RngStream rng(cfg.seed, kTuneRunStream);
            return run_generation(policy, oracle, env, run_stats, rounds, rng,
                                  1);
        };

        PolicyConfig greedy;
        greedy.kind = PolicyKind::Greedy;
        GenerationRun greedy_run = simulate_policy(greedy);
        write_text_file(cfg.output_dir / "hist_greedy.csv",
                        histogram_csv(selected_probability_histogram(
                                          greedy_run.records, oracle,
                                          env.schema),
                                      "greedy"));

        std::string table = "gamma,exploration_pct\n";
        out << "gamma      exploration_pct\n";
        for (std::size_t i = 0; i < gammas.size(); ++i) {
            PolicyConfig policy;
            policy.kind = PolicyKind::SquareCb;
            policy.gamma = gammas[i];
            GenerationRun run = simulate_policy(policy);
            double pct = run.report.effective_exploration * 100.0;
            char row[96];
            std::snprintf(row, sizeof(row), "%.9g,%.6f\n", gammas[i], pct);
            table += row;
            std::snprintf(row, sizeof(row), "%-10.6g %.4f%%", gammas[i], pct);
            out << row << '\n';

            char label[48];
            std::snprintf(label, sizeof(label), "gamma=%.9g", gammas[i]);
            write_text_file(
                cfg.output_dir /
                    ("hist_gamma_" + std::to_string(i) + ".csv"),
                histogram_csv(selected_probability_histogram(
                                  run.records, oracle, env.schema),
                              label));
        }
        write_text_file(cfg.output_dir / "tune_gamma.csv", table);
        out << "artifacts: " << cfg.output_dir.string() << '\n';
        return kExitOk;
    });
}

int cmd_eval_offline(const std::filesystem::path& logs_path,
                     const std::filesystem::path& oracle_path,
                     const std::string& policy_spec,
                     const std::string& estimator, std::optional<double> clip,
                     std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        if (estimator != "ips" && estimator != "snips") {
            throw ConfigError("estimator must be ips or snips");
        }
        LogFile logs = read_log_file(logs_path);
        LoadedOracle loaded = load_oracle(oracle_path);
        const std::uint64_t oracle_fp = oracle_schema_fp(loaded.oracle);
        if (logs.header.schema_fp != oracle_fp) {
            char msg[160];
            std::snprintf(msg, sizeof(msg),
                          "log schema fingerprint %016llx does not match "
                          "oracle fingerprint %016llx",
                          static_cast<unsigned long long>(
                              logs.header.schema_fp),
                          static_cast<unsigned long long>(oracle_fp));
            throw SchemaError(msg);
        }

        TargetPolicy target;
        target.policy = parse_policy_spec(policy_spec);
        target.oracle = &loaded.oracle;
        target.schema = &loaded.schema;

        OffPolicyEstimate est =
            estimator == "ips" ? ips_value(logs.records, target, clip)
                               : snips_value(logs.records, target, clip);

        ojson j;
        j["estimator"] = est.estimator;
        j["value"] = est.value;
        if (est.clip) {
            j["M"] = *est.clip;
        } else {
            j["M"] = nullptr;
        }
        j["n"] = est.n;
        j["ess"] = est.effective_sample_size;
        j["max_weight"] = est.max_weight;
        j["mean_weight"] = est.mean_weight;
        std::string text = j.dump(2) + "\n";
        out << text;

        auto estimate_path =
            logs_path.parent_path() /
            (logs_path.stem().string() + ".estimate.json");
        write_text_file(estimate_path, text);
        return kExitOk;
    });
}

namespace {

struct LoadedArm {
    std::string name;          // directory name
    std::int32_t index = 0;    // numeric prefix
    std::filesystem::path dir;
    std::vector<std::vector<LogRecord>> generations;
    std::vector<GenerationReport> reports;  // recomputed
};

std::vector<LoadedArm> load_experiment_arms(
    const std::filesystem::path& experiment_dir, bool partial,
    std::ostream& err) {
    std::vector<LoadedArm> arms;
    for (const auto& entry :
         std::filesystem::directory_iterator(experiment_dir)) {
        if (!entry.is_directory()) {
            continue;
        }
        std::string name = entry.path().filename().string();
        if (name.rfind("arm", 0) != 0) {
            continue;
        }
        LoadedArm arm;
        arm.name = name;
        arm.dir = entry.path();
        arm.index = std::atoi(name.c_str() + 3);
        arms.push_back(std::move(arm));
    }
    if (arms.empty()) {
        throw ConfigError("no arm directories found under " +
                          experiment_dir.string());
    }
    std::sort(arms.begin(), arms.end(),
              [](const LoadedArm& a, const LoadedArm& b) {
                  return a.index != b.index ? a.index < b.index
                                            : a.name < b.name;
              });

    for (LoadedArm& arm : arms) {
        for (std::int32_t g = 0;; ++g) {
            auto path = arm.dir / ("gen" + std::to_string(g) + ".log");
            if (!std::filesystem::exists(path)) {
                break;
            }
            LogFile file = read_log_file(path);
            if (file.records.empty()) {
                if (partial) {
                    err << "warning: " << path.string()
                        << " has no records; skipping\n";
                    break;
                }
                throw ParseError(path.string() + ": no records");
            }
            arm.reports.push_back(make_generation_report(file.records));
            arm.generations.push_back(std::move(file.records));
        }
        if (arm.generations.empty()) {
            throw ConfigError("arm " + arm.name + " has no readable logs");
        }
    }
    return arms;
}

}  // namespace

int cmd_report(const std::filesystem::path& experiment_dir, std::ostream& out,
               std::ostream& err) {
    return run_guarded(err, [&]() {
        if (!std::filesystem::is_directory(experiment_dir)) {
            throw ConfigError("not a directory: " + experiment_dir.string());
        }
        const bool partial =
            std::filesystem::exists(experiment_dir / kPartialMarker);
        if (partial) {
            err << "warning: partial experiment (marker present); rendering "
                   "completed generations only\n";
        }

        std::vector<LoadedArm> arms =
            load_experiment_arms(experiment_dir, partial, err);

        // Stored reports must match what the logs actually contain.
        if (!partial) {
            for (const LoadedArm& arm : arms) {
                std::string stored = read_text_file(arm.dir / "report.json");
                std::string recomputed = arm_report_string(arm.reports);
                if (stored != recomputed) {
                    throw std::runtime_error("report/logs mismatch in " +
                                             arm.name);
                }
            }
        }

        out << "arm                   gen  mean_reward [ci95]            "
               "explore   gini      positive\n";
        for (const LoadedArm& arm : arms) {
            for (std::size_t g = 0; g < arm.reports.size(); ++g) {
                const GenerationReport& r = arm.reports[g];
                char line[192];
                std::snprintf(line, sizeof(line),
                              "%-21s %-4zu %.5f [%.5f, %.5f]  %-9.5f %-9.5f "
                              "%.5f",
                              arm.name.c_str(), g, r.mean_reward, r.ci95.lo,
                              r.ci95.hi, r.effective_exploration,
                              r.gini_weighted, r.positive_rate);
                out << line << '\n';
            }
        }

        if (arms.size() >= 2) {
            out << "\nuplift vs " << arms.front().name << ":\n";
            const LoadedArm& base = arms.front();
            for (std::size_t k = 1; k < arms.size(); ++k) {
                const LoadedArm& variant = arms[k];
                std::size_t gens = std::min(variant.generations.size(),
                                            base.generations.size());
                for (std::size_t g = 1; g < gens; ++g) {
                    UpliftResult u = uplift(variant.generations[g],
                                            base.generations[g]);
                    char line[192];
                    std::snprintf(line, sizeof(line),
                                  "%-21s gen %-3zu %+0.4f%% ci95 [%+0.4f%%, "
                                  "%+0.4f%%] excludes_zero=%s",
                                  variant.name.c_str(), g, u.percent,
                                  u.ci95.lo, u.ci95.hi,
                                  u.excludes_zero ? "true" : "false");
                    out << line << '\n';
                }
            }
        }

        // Plot-ready CSVs: per-size exploration and Lorenz points for the
        // highest-traffic eligible-set groups.
        auto analysis_dir = experiment_dir / "analysis";
        std::filesystem::create_directories(analysis_dir);
        for (const LoadedArm& arm : arms) {
            for (std::size_t g = 0; g < arm.generations.size(); ++g) {
                std::string sizes_csv = "action_space_size,exploration_rate\n";
                for (const auto& [size, rate] :
                     arm.reports[g].exploration_by_size) {
                    char row[64];
                    std::snprintf(row, sizeof(row), "%lld,%.9f\n",
                                  static_cast<long long>(size), rate);
                    sizes_csv += row;
                }
                write_text_file(analysis_dir /
                                    (arm.name + "_gen" + std::to_string(g) +
                                     "_exploration_by_size.csv"),
                                sizes_csv);

                auto groups = group_by_eligible_signature(arm.generations[g]);
                std::vector<std::pair<std::vector<ActionId>, TrafficGroup>>
                    ordered(groups.begin(), groups.end());
                std::stable_sort(ordered.begin(), ordered.end(),
                                 [](const auto& a, const auto& b) {
                                     return a.second.traffic >
                                            b.second.traffic;
                                 });
                const std::size_t top =
                    std::min<std::size_t>(5, ordered.size());
                for (std::size_t j = 0; j < top; ++j) {
                    LorenzCurve curve =
                        lorenz_curve(ordered[j].second.action_counts);
                    std::string csv = "population_share,action_share\n";
                    for (const auto& [x, y] : curve.points) {
                        char row[64];
                        std::snprintf(row, sizeof(row), "%.9f,%.9f\n", x, y);
                        csv += row;
                    }
                    write_text_file(
                        analysis_dir /
                            (arm.name + "_gen" + std::to_string(g) +
                             "_lorenz_group" + std::to_string(j) + ".csv"),
                        csv);
                }
            }
        }
        out << "analysis CSVs: " << analysis_dir.string() << '\n';
        return kExitOk;
    });
}

}  // namespace banditlab
