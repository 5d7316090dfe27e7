#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "banditlab/features.hpp"

namespace banditlab {

enum class OracleKind { Logistic, Trees };

struct TrainConfig {
    OracleKind kind = OracleKind::Logistic;
    std::int32_t rounds = 30;     // SGD epochs (logistic) / boosting rounds (trees)
    double step = 0.1;            // SGD step size (logistic) / shrinkage (trees)
    double subsample = 1.0;       // row fraction per boosting round, (0,1]
    std::int32_t max_depth = 3;   // trees only
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    double prob_clamp = 1e-6;     // epsilon_p; predictions live in [eps, 1-eps]
    std::int32_t batch_size = 64;  // logistic mini-batch size
    double reg_lambda = 1.0;       // trees leaf L2 regularizer
};

// Training rows in one flat row-major block; all rows share one schema.
class Dataset {
public:
    Dataset(std::uint64_t schema_fp, std::int32_t dim);

    void add_row(std::span<const double> features, std::int32_t label,
                 double weight = 1.0);
    void add_row(const FeatureVector& fv, std::int32_t label,
                 double weight = 1.0);
    void reserve(std::size_t rows);

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    std::int32_t dim() const { return dim_; }
    std::uint64_t schema_fp() const { return schema_fp_; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    std::int32_t label(std::size_t i) const { return labels_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

private:
    std::uint64_t schema_fp_;
    std::int32_t dim_;
    std::vector<double> values_;
    std::vector<std::int32_t> labels_;
    std::vector<double> weights_;
};

double sigmoid(double z);
double logit(double p);

// Mean of -[y log p + (1-y) log(1-p)] with predictions clamped into
// [prob_clamp, 1 - prob_clamp] before the logs.
double bce_loss(std::span<const double> predictions,
                std::span<const std::int32_t> labels,
                double prob_clamp = 1e-6);

struct LogisticOracle {
    std::vector<double> weights;
    double bias = 0.0;
    std::uint64_t schema_fp = 0;
    double prob_clamp = 1e-6;

    double raw_score(std::span<const double> x) const;
    double predict_values(std::span<const double> x) const;
    double predict(const FeatureVector& x) const;  // checks the fingerprint
};

// Analytic BCE gradient of the logistic model at (weights, bias); exposed so
// tests can check it against finite differences.
void logistic_gradient(const Dataset& data, std::span<const double> weights,
                       double bias, std::span<double> grad_w, double& grad_b);

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // leaf log-odds increment

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double eval(std::span<const double> x) const;
};

struct TreesOracle {
    std::vector<RegressionTree> trees;
    double base_score = 0.0;  // log-odds
    double shrinkage = 0.1;
    std::int32_t max_depth = 3;
    std::uint64_t schema_fp = 0;
    double prob_clamp = 1e-6;

    // Log-odds using the first n_trees trees; n_trees == trees.size() gives
    // the full ensemble. Lets tests recover the per-round loss curve.
    double raw_score(std::span<const double> x, std::size_t n_trees) const;
    double predict_values(std::span<const double> x) const;
    double predict(const FeatureVector& x) const;
};

LogisticOracle train_logistic(const Dataset& data, const TrainConfig& cfg);
TreesOracle train_trees(const Dataset& data, const TrainConfig& cfg);

using Oracle = std::variant<LogisticOracle, TreesOracle>;

double predict(const Oracle& oracle, const FeatureVector& x);
// Fast path for callers that already validated the schema.
double predict_values(const Oracle& oracle, std::span<const double> x);
std::uint64_t oracle_schema_fp(const Oracle& oracle);

// Oracle files embed the feature-schema config so a stored oracle is enough
// to featurize new (context, action) pairs; the fingerprint is recomputed
// and verified on load.
std::string serialize_oracle(const Oracle& oracle, const FeatureSchema& schema);

struct LoadedOracle {
    Oracle oracle;
    FeatureSchema schema;
};

LoadedOracle deserialize_oracle(std::string_view text);
void save_oracle(const Oracle& oracle, const FeatureSchema& schema,
                 const std::filesystem::path& path);
// Throws SchemaError when expected_schema_fp != 0 and the stored fingerprint
// does not match.
LoadedOracle load_oracle(const std::filesystem::path& path,
                         std::uint64_t expected_schema_fp = 0);

}  // namespace banditlab
