#include "banditlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "banditlab/errors.hpp"
#include "banditlab/rng.hpp"

namespace banditlab {

namespace {

using ojson = nlohmann::ordered_json;

double clamp_prob(double p, double eps) {
    return std::clamp(p, eps, 1.0 - eps);
}

void check_train_config(const TrainConfig& cfg) {
    if (cfg.rounds < 0) {
        throw ConfigError("rounds must be >= 0");
    }
    if (!(cfg.step > 0.0)) {
        throw ConfigError("step/shrinkage must be > 0");
    }
    if (!(cfg.subsample > 0.0) || cfg.subsample > 1.0) {
        throw ConfigError("subsample must lie in (0,1]");
    }
    if (!(cfg.prob_clamp > 0.0) || !(cfg.prob_clamp < 0.5)) {
        throw ConfigError("prob_clamp must lie in (0, 0.5)");
    }
}

void check_dataset(const Dataset& data) {
    if (data.empty()) {
        throw ConfigError("training requires a non-empty dataset");
    }
}

}  // namespace

Dataset::Dataset(std::uint64_t schema_fp, std::int32_t dim)
    : schema_fp_(schema_fp), dim_(dim) {
    if (dim < 1) {
        throw ConfigError("dataset dimension must be >= 1");
    }
}

void Dataset::add_row(std::span<const double> features, std::int32_t label,
                      double weight) {
    if (features.size() != static_cast<std::size_t>(dim_)) {
        throw SchemaError("row dimension mismatch");
    }
    if (label != 0 && label != 1) {
        throw ValidationError("label must be binary");
    }
    if (!(weight >= 0.0)) {
        throw ValidationError("row weight must be >= 0");
    }
    for (double v : features) {
        if (!std::isfinite(v)) {
            throw ValidationError("non-finite feature value");
        }
    }
    values_.insert(values_.end(), features.begin(), features.end());
    labels_.push_back(label);
    weights_.push_back(weight);
}

void Dataset::add_row(const FeatureVector& fv, std::int32_t label,
                      double weight) {
    if (fv.schema_fp != schema_fp_) {
        throw SchemaError("feature vector schema fingerprint mismatch");
    }
    add_row(std::span<const double>(fv.values), label, weight);
}

void Dataset::reserve(std::size_t rows) {
    values_.reserve(rows * static_cast<std::size_t>(dim_));
    labels_.reserve(rows);
    weights_.reserve(rows);
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) {
    return std::log(p / (1.0 - p));
}

double bce_loss(std::span<const double> predictions,
                std::span<const std::int32_t> labels, double prob_clamp) {
    if (predictions.size() != labels.size()) {
        throw ValidationError("bce_loss: predictions/labels length mismatch");
    }
    if (predictions.empty()) {
        throw ValidationError("bce_loss: empty input");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double p = clamp_prob(predictions[i], prob_clamp);
        total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(predictions.size());
}

double LogisticOracle::raw_score(std::span<const double> x) const {
    if (x.size() != weights.size()) {
        throw SchemaError("logistic oracle dimension mismatch");
    }
    double z = bias;
    for (std::size_t i = 0; i < x.size(); ++i) {
        z += weights[i] * x[i];
    }
    return z;
}

double LogisticOracle::predict_values(std::span<const double> x) const {
    return clamp_prob(sigmoid(raw_score(x)), prob_clamp);
}

double LogisticOracle::predict(const FeatureVector& x) const {
    if (x.schema_fp != schema_fp) {
        throw SchemaError("prediction schema fingerprint mismatch");
    }
    return predict_values(x.values);
}

void logistic_gradient(const Dataset& data, std::span<const double> weights,
                       double bias, std::span<double> grad_w, double& grad_b) {
    if (weights.size() != static_cast<std::size_t>(data.dim()) ||
        grad_w.size() != weights.size()) {
        throw SchemaError("gradient dimension mismatch");
    }
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_b = 0.0;
    const double n = static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.row(i);
        double z = bias;
        for (std::size_t k = 0; k < x.size(); ++k) {
            z += weights[k] * x[k];
        }
        double residual = sigmoid(z) - static_cast<double>(data.label(i));
        for (std::size_t k = 0; k < x.size(); ++k) {
            grad_w[k] += residual * x[k] / n;
        }
        grad_b += residual / n;
    }
}

namespace {

double logistic_train_loss(const Dataset& data, const std::vector<double>& w,
                           double b, double eps) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.row(i);
        double z = b;
        for (std::size_t k = 0; k < x.size(); ++k) {
            z += w[k] * x[k];
        }
        double p = clamp_prob(sigmoid(z), eps);
        total += data.label(i) == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(data.size());
}

}  // namespace

LogisticOracle train_logistic(const Dataset& data, const TrainConfig& cfg) {
    check_dataset(data);
    check_train_config(cfg);
    if (cfg.kind != OracleKind::Logistic) {
        throw ConfigError("train_logistic requires kind = logistic");
    }
    if (cfg.batch_size < 1) {
        throw ConfigError("batch_size must be >= 1");
    }

    const std::size_t n = data.size();
    const std::size_t dim = static_cast<std::size_t>(data.dim());
    std::vector<double> w(dim, 0.0);
    double b = 0.0;

    RngStream rng(cfg.seed, cfg.stream_id);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    // Snapshot of the best full-data loss seen at an epoch boundary; the
    // returned model never trains worse than the zero initialization.
    double best_loss = logistic_train_loss(data, w, b, cfg.prob_clamp);
    std::vector<double> best_w = w;
    double best_b = b;

    std::vector<double> grad(dim, 0.0);
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

    for (std::int32_t epoch = 0; epoch < cfg.rounds; ++epoch) {
        // Fisher-Yates shuffle from the config stream.
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(i)));
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(start + batch, n);
            const double m = static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t idx = start; idx < end; ++idx) {
                auto x = data.row(order[idx]);
                double z = b;
                for (std::size_t k = 0; k < dim; ++k) {
                    z += w[k] * x[k];
                }
                double residual =
                    sigmoid(z) - static_cast<double>(data.label(order[idx]));
                for (std::size_t k = 0; k < dim; ++k) {
                    grad[k] += residual * x[k];
                }
                grad_b += residual;
            }
            for (std::size_t k = 0; k < dim; ++k) {
                w[k] -= cfg.step * grad[k] / m;
            }
            b -= cfg.step * grad_b / m;
        }
        double loss = logistic_train_loss(data, w, b, cfg.prob_clamp);
        if (loss <= best_loss) {
            best_loss = loss;
            best_w = w;
            best_b = b;
        }
    }

    LogisticOracle oracle;
    oracle.weights = std::move(best_w);
    oracle.bias = best_b;
    oracle.schema_fp = data.schema_fp();
    oracle.prob_clamp = cfg.prob_clamp;
    return oracle;
}

double RegressionTree::eval(std::span<const double> x) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const TreeNode& nd = nodes[node];
        node = static_cast<std::size_t>(
            x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                    : nd.right);
    }
    return nodes[node].value;
}

double TreesOracle::raw_score(std::span<const double> x,
                              std::size_t n_trees) const {
    double score = base_score;
    n_trees = std::min(n_trees, trees.size());
    for (std::size_t i = 0; i < n_trees; ++i) {
        score += shrinkage * trees[i].eval(x);
    }
    return score;
}

double TreesOracle::predict_values(std::span<const double> x) const {
    return clamp_prob(sigmoid(raw_score(x, trees.size())), prob_clamp);
}

double TreesOracle::predict(const FeatureVector& x) const {
    if (x.schema_fp != schema_fp) {
        throw SchemaError("prediction schema fingerprint mismatch");
    }
    return predict_values(x.values);
}

double predict(const Oracle& oracle, const FeatureVector& x) {
    return std::visit([&](const auto& o) { return o.predict(x); }, oracle);
}

double predict_values(const Oracle& oracle, std::span<const double> x) {
    return std::visit([&](const auto& o) { return o.predict_values(x); },
                      oracle);
}

std::uint64_t oracle_schema_fp(const Oracle& oracle) {
    return std::visit([](const auto& o) { return o.schema_fp; }, oracle);
}

namespace {

ojson schema_config_json(const FeatureSchema& schema) {
    const FeatureSchemaConfig& sc = schema.config();
    ojson j;
    j["countries"] = sc.countries;
    j["merchants"] = sc.merchants;
    j["mccs"] = sc.mccs;
    j["devices"] = sc.devices;
    j["extra_numeric_dim"] = sc.extra_numeric_dim;
    j["a_max"] = sc.a_max;
    j["amount_scale_max"] = sc.amount_scale_max;
    return j;
}

FeatureSchema schema_from_json(const ojson& j) {
    FeatureSchemaConfig sc;
    sc.countries = j.at("countries").get<std::int32_t>();
    sc.merchants = j.at("merchants").get<std::int32_t>();
    sc.mccs = j.at("mccs").get<std::int32_t>();
    sc.devices = j.at("devices").get<std::int32_t>();
    sc.extra_numeric_dim = j.at("extra_numeric_dim").get<std::int32_t>();
    sc.a_max = j.at("a_max").get<std::int32_t>();
    sc.amount_scale_max = j.at("amount_scale_max").get<double>();
    return FeatureSchema(sc);
}

}  // namespace

std::string serialize_oracle(const Oracle& oracle,
                             const FeatureSchema& schema) {
    if (schema.fingerprint() != oracle_schema_fp(oracle)) {
        throw SchemaError("oracle fingerprint does not match schema");
    }
    ojson j;
    if (const auto* logistic = std::get_if<LogisticOracle>(&oracle)) {
        j["kind"] = "logistic";
        j["schema_fp"] = logistic->schema_fp;
        j["schema"] = schema_config_json(schema);
        j["prob_clamp"] = logistic->prob_clamp;
        j["bias"] = logistic->bias;
        j["weights"] = logistic->weights;
    } else {
        const auto& trees = std::get<TreesOracle>(oracle);
        j["kind"] = "trees";
        j["schema_fp"] = trees.schema_fp;
        j["schema"] = schema_config_json(schema);
        j["prob_clamp"] = trees.prob_clamp;
        j["base_score"] = trees.base_score;
        j["shrinkage"] = trees.shrinkage;
        j["max_depth"] = trees.max_depth;
        ojson tree_list = ojson::array();
        for (const RegressionTree& tree : trees.trees) {
            ojson nodes = ojson::array();
            for (const TreeNode& nd : tree.nodes) {
                nodes.push_back(ojson::array(
                    {nd.feature, nd.threshold, nd.left, nd.right, nd.value}));
            }
            tree_list.push_back(std::move(nodes));
        }
        j["trees"] = std::move(tree_list);
    }
    return j.dump();
}

LoadedOracle deserialize_oracle(std::string_view text) {
    ojson j = ojson::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind")) {
        throw ParseError("malformed oracle file");
    }
    LoadedOracle loaded;
    try {
        loaded.schema = schema_from_json(j.at("schema"));
    } catch (const ojson::exception&) {
        throw ParseError("oracle file missing schema section");
    }
    const std::uint64_t stored_fp = j.at("schema_fp").get<std::uint64_t>();
    if (stored_fp != loaded.schema.fingerprint()) {
        throw SchemaError("oracle schema_fp disagrees with its schema config");
    }

    const std::string kind = j["kind"].get<std::string>();
    if (kind == "logistic") {
        LogisticOracle o;
        o.schema_fp = stored_fp;
        o.prob_clamp = j.at("prob_clamp").get<double>();
        o.bias = j.at("bias").get<double>();
        o.weights = j.at("weights").get<std::vector<double>>();
        loaded.oracle = std::move(o);
        return loaded;
    }
    if (kind == "trees") {
        TreesOracle o;
        o.schema_fp = stored_fp;
        o.prob_clamp = j.at("prob_clamp").get<double>();
        o.base_score = j.at("base_score").get<double>();
        o.shrinkage = j.at("shrinkage").get<double>();
        o.max_depth = j.at("max_depth").get<std::int32_t>();
        for (const ojson& tree_json : j.at("trees")) {
            RegressionTree tree;
            for (const ojson& nd_json : tree_json) {
                TreeNode nd;
                nd.feature = nd_json.at(0).get<std::int32_t>();
                nd.threshold = nd_json.at(1).get<double>();
                nd.left = nd_json.at(2).get<std::int32_t>();
                nd.right = nd_json.at(3).get<std::int32_t>();
                nd.value = nd_json.at(4).get<double>();
                tree.nodes.push_back(nd);
            }
            o.trees.push_back(std::move(tree));
        }
        loaded.oracle = std::move(o);
        return loaded;
    }
    throw ParseError("unknown oracle kind \"" + kind + "\"");
}

void save_oracle(const Oracle& oracle, const FeatureSchema& schema,
                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open oracle file for writing: " +
                          path.string());
    }
    out << serialize_oracle(oracle, schema) << '\n';
}

LoadedOracle load_oracle(const std::filesystem::path& path,
                         std::uint64_t expected_schema_fp) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open oracle file: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    LoadedOracle loaded = deserialize_oracle(buf.str());
    if (expected_schema_fp != 0 &&
        oracle_schema_fp(loaded.oracle) != expected_schema_fp) {
        throw SchemaError("oracle schema fingerprint mismatch for " +
                          path.string());
    }
    return loaded;
}

}  // namespace banditlab
