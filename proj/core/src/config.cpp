#include "banditlab/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "banditlab/errors.hpp"

namespace banditlab {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

void reject_unknown_keys(const ojson& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.contains(key)) {
            fail(where, "unknown key \"" + key + "\"");
        }
    }
}

template <typename T>
T get_field(const ojson& j, const std::string& where, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) {
        fail(where, std::string("missing \"") + name + "\"");
    }
    try {
        return it->get<T>();
    } catch (const ojson::exception&) {
        fail(where, std::string("\"") + name + "\" has wrong type");
    }
}

template <typename T>
T get_field_or(const ojson& j, const char* name, T fallback) {
    auto it = j.find(name);
    if (it == j.end()) {
        return fallback;
    }
    return it->get<T>();
}

EnvConfig parse_env(const ojson& j) {
    if (!j.is_object()) {
        fail("env", "must be an object");
    }
    reject_unknown_keys(
        j,
        {"countries", "merchants", "mccs", "devices", "amount_mu",
         "amount_sigma", "extra_numeric_dim", "a_max", "rule_seed",
         "rule_density", "min_samples", "min_auth_rate", "hidden_seed",
         "lambda", "base_rate_target", "amount_scale_max"},
        "env");
    EnvConfig defaults;
    EnvConfig env;
    env.countries = get_field_or(j, "countries", defaults.countries);
    env.merchants = get_field_or(j, "merchants", defaults.merchants);
    env.mccs = get_field_or(j, "mccs", defaults.mccs);
    env.devices = get_field_or(j, "devices", defaults.devices);
    env.amount_mu = get_field_or(j, "amount_mu", defaults.amount_mu);
    env.amount_sigma = get_field_or(j, "amount_sigma", defaults.amount_sigma);
    env.extra_numeric_dim =
        get_field_or(j, "extra_numeric_dim", defaults.extra_numeric_dim);
    env.a_max = get_field_or(j, "a_max", defaults.a_max);
    env.rule_seed = get_field_or(j, "rule_seed", defaults.rule_seed);
    env.rule_density = get_field_or(j, "rule_density", defaults.rule_density);
    env.min_samples = get_field_or(j, "min_samples", defaults.min_samples);
    env.min_auth_rate =
        get_field_or(j, "min_auth_rate", defaults.min_auth_rate);
    env.hidden_seed = get_field_or(j, "hidden_seed", defaults.hidden_seed);
    env.lambda = get_field_or(j, "lambda", defaults.lambda);
    env.base_rate_target =
        get_field_or(j, "base_rate_target", defaults.base_rate_target);
    env.amount_scale_max =
        get_field_or(j, "amount_scale_max", defaults.amount_scale_max);
    return env;
}

PolicyConfig parse_policy_json(const ojson& j, const std::string& where) {
    if (j.is_string()) {
        return parse_policy_spec(j.get<std::string>());
    }
    if (!j.is_object()) {
        fail(where, "policy must be an object or spec string");
    }
    reject_unknown_keys(j, {"kind", "epsilon", "gamma"}, where);
    const std::string kind = get_field<std::string>(j, where, "kind");
    PolicyConfig policy;
    if (kind == "greedy") {
        policy.kind = PolicyKind::Greedy;
    } else if (kind == "epsilon_greedy") {
        policy.kind = PolicyKind::EpsilonGreedy;
        policy.epsilon = get_field<double>(j, where, "epsilon");
    } else if (kind == "squarecb") {
        policy.kind = PolicyKind::SquareCb;
        policy.gamma = get_field<double>(j, where, "gamma");
    } else {
        fail(where, "unknown policy kind \"" + kind + "\"");
    }
    return policy;
}

TrainConfig parse_oracle_json(const ojson& j, const std::string& where) {
    if (!j.is_object()) {
        fail(where, "oracle must be an object");
    }
    reject_unknown_keys(j,
                        {"kind", "rounds", "step", "subsample", "max_depth",
                         "seed", "prob_clamp", "batch_size", "reg_lambda"},
                        where);
    TrainConfig cfg;
    const std::string kind = get_field<std::string>(j, where, "kind");
    if (kind == "logistic") {
        cfg.kind = OracleKind::Logistic;
    } else if (kind == "trees") {
        cfg.kind = OracleKind::Trees;
    } else {
        fail(where, "unknown oracle kind \"" + kind + "\"");
    }
    cfg.rounds = get_field_or(j, "rounds", cfg.rounds);
    cfg.step = get_field_or(j, "step", cfg.step);
    cfg.subsample = get_field_or(j, "subsample", cfg.subsample);
    cfg.max_depth = get_field_or(j, "max_depth", cfg.max_depth);
    cfg.seed = get_field_or(j, "seed", cfg.seed);
    cfg.prob_clamp = get_field_or(j, "prob_clamp", cfg.prob_clamp);
    cfg.batch_size = get_field_or(j, "batch_size", cfg.batch_size);
    cfg.reg_lambda = get_field_or(j, "reg_lambda", cfg.reg_lambda);
    return cfg;
}

GenerationSpec parse_arm(const ojson& j, std::size_t index) {
    const std::string where = "arms[" + std::to_string(index) + "]";
    if (!j.is_object()) {
        fail(where, "must be an object");
    }
    reject_unknown_keys(j,
                        {"label", "rounds_per_generation", "generations",
                         "policy", "oracle", "training_window"},
                        where);
    GenerationSpec spec;
    spec.label = get_field<std::string>(j, where, "label");
    spec.rounds_per_generation =
        get_field<std::int64_t>(j, where, "rounds_per_generation");
    spec.generations = get_field_or(j, "generations", spec.generations);
    auto pit = j.find("policy");
    if (pit == j.end()) {
        fail(where, "missing \"policy\"");
    }
    spec.policy = parse_policy_json(*pit, where + ".policy");
    auto oit = j.find("oracle");
    if (oit == j.end()) {
        fail(where, "missing \"oracle\"");
    }
    spec.oracle_cfg = parse_oracle_json(*oit, where + ".oracle");
    const std::string window =
        get_field_or<std::string>(j, "training_window", "latest");
    if (window == "latest") {
        spec.window = TrainingWindow::LatestOnly;
    } else if (window == "all_past") {
        spec.window = TrainingWindow::AllPast;
    } else {
        fail(where, "training_window must be \"latest\" or \"all_past\"");
    }
    return spec;
}

}  // namespace

void ExperimentConfig::validate() const {
    env.validate();
    if (arms.empty()) {
        throw ConfigError("config: arms: at least one arm required");
    }
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const GenerationSpec& arm = arms[i];
        const std::string where = "config: arms[" + std::to_string(i) + "]";
        // Identical arms are allowed (and replay identically); directories
        // are disambiguated by the arm index.
        if (arm.label.empty()) {
            throw ConfigError(where + ": label must be non-empty");
        }
        if (arm.rounds_per_generation < 1) {
            throw ConfigError(where + ": rounds_per_generation must be >= 1");
        }
        if (arm.generations < 1) {
            throw ConfigError(where + ": generations must be >= 1");
        }
        if (arm.policy.kind == PolicyKind::EpsilonGreedy &&
            (!(arm.policy.epsilon >= 0.0) || arm.policy.epsilon > 1.0)) {
            throw ConfigError(where + ": epsilon must lie in [0,1]");
        }
        if (arm.policy.kind == PolicyKind::SquareCb &&
            !(arm.policy.gamma > 0.0)) {
            throw ConfigError(where + ": gamma must be > 0");
        }
    }
    if (output_dir.empty()) {
        throw ConfigError("config: output_dir must be set");
    }
    if (bootstrap_n < 1) {
        throw ConfigError("config: bootstrap_n must be >= 1");
    }
}

ExperimentConfig parse_experiment_config(std::string_view text) {
    ojson j = ojson::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError("config: not a JSON object");
    }
    reject_unknown_keys(j, {"env", "arms", "seed", "output_dir", "bootstrap_n"},
                        "config");
    ExperimentConfig cfg;
    auto eit = j.find("env");
    if (eit == j.end()) {
        fail("config", "missing \"env\" section");
    }
    cfg.env = parse_env(*eit);
    auto ait = j.find("arms");
    if (ait == j.end() || !ait->is_array()) {
        fail("config", "missing \"arms\" array");
    }
    for (std::size_t i = 0; i < ait->size(); ++i) {
        cfg.arms.push_back(parse_arm((*ait)[i], i));
    }
    // Wall-clock seeding is not allowed: the seed must be in the file.
    cfg.seed = get_field<std::uint64_t>(j, "config", "seed");
    cfg.output_dir = get_field<std::string>(j, "config", "output_dir");
    cfg.bootstrap_n = get_field<std::int64_t>(j, "config", "bootstrap_n");
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config: cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::string canonical_config_string(const ExperimentConfig& cfg) {
    ojson j;
    ojson env;
    env["countries"] = cfg.env.countries;
    env["merchants"] = cfg.env.merchants;
    env["mccs"] = cfg.env.mccs;
    env["devices"] = cfg.env.devices;
    env["amount_mu"] = cfg.env.amount_mu;
    env["amount_sigma"] = cfg.env.amount_sigma;
    env["extra_numeric_dim"] = cfg.env.extra_numeric_dim;
    env["a_max"] = cfg.env.a_max;
    env["rule_seed"] = cfg.env.rule_seed;
    env["rule_density"] = cfg.env.rule_density;
    env["min_samples"] = cfg.env.min_samples;
    env["min_auth_rate"] = cfg.env.min_auth_rate;
    env["hidden_seed"] = cfg.env.hidden_seed;
    env["lambda"] = cfg.env.lambda;
    env["base_rate_target"] = cfg.env.base_rate_target;
    env["amount_scale_max"] = cfg.env.amount_scale_max;
    j["env"] = std::move(env);

    ojson arms = ojson::array();
    for (const GenerationSpec& arm : cfg.arms) {
        ojson a;
        a["label"] = arm.label;
        a["rounds_per_generation"] = arm.rounds_per_generation;
        a["generations"] = arm.generations;
        ojson policy;
        switch (arm.policy.kind) {
            case PolicyKind::Greedy:
                policy["kind"] = "greedy";
                break;
            case PolicyKind::EpsilonGreedy:
                policy["kind"] = "epsilon_greedy";
                policy["epsilon"] = arm.policy.epsilon;
                break;
            case PolicyKind::SquareCb:
                policy["kind"] = "squarecb";
                policy["gamma"] = arm.policy.gamma;
                break;
        }
        a["policy"] = std::move(policy);
        ojson oracle;
        oracle["kind"] =
            arm.oracle_cfg.kind == OracleKind::Logistic ? "logistic" : "trees";
        oracle["rounds"] = arm.oracle_cfg.rounds;
        oracle["step"] = arm.oracle_cfg.step;
        oracle["subsample"] = arm.oracle_cfg.subsample;
        oracle["max_depth"] = arm.oracle_cfg.max_depth;
        oracle["seed"] = arm.oracle_cfg.seed;
        oracle["prob_clamp"] = arm.oracle_cfg.prob_clamp;
        oracle["batch_size"] = arm.oracle_cfg.batch_size;
        oracle["reg_lambda"] = arm.oracle_cfg.reg_lambda;
        a["oracle"] = std::move(oracle);
        a["training_window"] =
            arm.window == TrainingWindow::LatestOnly ? "latest" : "all_past";
        arms.push_back(std::move(a));
    }
    j["arms"] = std::move(arms);
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    j["bootstrap_n"] = cfg.bootstrap_n;
    return j.dump(2) + "\n";
}

PolicyConfig parse_policy_spec(std::string_view spec) {
    if (spec == "greedy") {
        PolicyConfig p;
        p.kind = PolicyKind::Greedy;
        return p;
    }
    auto colon = spec.find(':');
    if (colon != std::string_view::npos) {
        std::string_view head = spec.substr(0, colon);
        std::string tail(spec.substr(colon + 1));
        try {
            std::size_t used = 0;
            double value = std::stod(tail, &used);
            if (used != tail.size()) {
                throw std::invalid_argument("trailing characters");
            }
            if (head == "epsilon") {
                PolicyConfig p;
                p.kind = PolicyKind::EpsilonGreedy;
                p.epsilon = value;
                return p;
            }
            if (head == "squarecb") {
                PolicyConfig p;
                p.kind = PolicyKind::SquareCb;
                p.gamma = value;
                return p;
            }
        } catch (const std::invalid_argument&) {
            // fall through to the error below
        } catch (const std::out_of_range&) {
        }
    }
    throw ConfigError("invalid policy spec \"" + std::string(spec) +
                      "\" (expected greedy | epsilon:<eps> | squarecb:<gamma>)");
}

std::string policy_spec_string(const PolicyConfig& policy) {
    switch (policy.kind) {
        case PolicyKind::Greedy:
            return "greedy";
        case PolicyKind::EpsilonGreedy:
            return "epsilon:" + std::to_string(policy.epsilon);
        case PolicyKind::SquareCb:
            return "squarecb:" + std::to_string(policy.gamma);
    }
    return "?";
}

}  // namespace banditlab
