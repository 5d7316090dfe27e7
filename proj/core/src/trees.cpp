#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "banditlab/errors.hpp"
#include "banditlab/oracle.hpp"
#include "banditlab/rng.hpp"

// Gradient boosting on the logistic loss: each round fits a regression tree
// to the (g, h) = (p - y, p(1-p)) statistics with Newton leaf weights
// -G/(H + lambda) and exact greedy split search over all feature thresholds.

namespace banditlab {

namespace {

constexpr double kMinSplitGain = 1e-12;

struct SplitCandidate {
    double gain = -std::numeric_limits<double>::infinity();
    std::int32_t feature = -1;
    double threshold = 0.0;

    // Deterministic preference order: larger gain, then lower feature index,
    // then lower threshold.
    bool better_than(const SplitCandidate& other) const {
        if (gain != other.gain) {
            return gain > other.gain;
        }
        if (feature != other.feature) {
            return feature < other.feature;
        }
        return threshold < other.threshold;
    }
};

double leaf_objective(double g, double h, double lambda) {
    return g * g / (h + lambda);
}

struct LevelNode {
    std::int32_t node_index = -1;
    double sum_g = 0.0;
    double sum_h = 0.0;
    std::int64_t count = 0;
    SplitCandidate best;
};

}  // namespace

TreesOracle train_trees(const Dataset& data, const TrainConfig& cfg) {
    if (data.empty()) {
        throw ConfigError("training requires a non-empty dataset");
    }
    if (cfg.kind != OracleKind::Trees) {
        throw ConfigError("train_trees requires kind = trees");
    }
    if (cfg.max_depth < 1) {
        throw ConfigError("max_depth must be >= 1");
    }
    if (!(cfg.step > 0.0) || !(cfg.subsample > 0.0) || cfg.subsample > 1.0 ||
        !(cfg.prob_clamp > 0.0) || !(cfg.prob_clamp < 0.5) ||
        !(cfg.reg_lambda >= 0.0)) {
        throw ConfigError("invalid trees training config");
    }

    const std::size_t n = data.size();
    const std::size_t dim = static_cast<std::size_t>(data.dim());
    const double lambda = cfg.reg_lambda;

    double label_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        label_mean += static_cast<double>(data.label(i));
    }
    label_mean /= static_cast<double>(n);
    label_mean = std::clamp(label_mean, cfg.prob_clamp, 1.0 - cfg.prob_clamp);

    TreesOracle oracle;
    oracle.base_score = logit(label_mean);
    oracle.shrinkage = cfg.step;
    oracle.max_depth = cfg.max_depth;
    oracle.schema_fp = data.schema_fp();
    oracle.prob_clamp = cfg.prob_clamp;
    if (cfg.rounds == 0) {
        return oracle;
    }

    // Column order computed once: row indices sorted by feature value, ties
    // by row index so traversal is reproducible.
    std::vector<std::vector<std::int32_t>> sorted_rows(dim);
    for (std::size_t f = 0; f < dim; ++f) {
        auto& order = sorted_rows[f];
        order.resize(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::int32_t a, std::int32_t b) {
                             return data.row(static_cast<std::size_t>(a))[f] <
                                    data.row(static_cast<std::size_t>(b))[f];
                         });
    }

    std::vector<double> score(n, oracle.base_score);
    std::vector<double> grad(n, 0.0);
    std::vector<double> hess(n, 0.0);
    std::vector<std::int32_t> pos(n, -1);  // node index per row, -1 = unused
    std::vector<std::size_t> sample(n);
    std::iota(sample.begin(), sample.end(), std::size_t{0});
    RngStream rng(cfg.seed, cfg.stream_id);

    for (std::int32_t round = 0; round < cfg.rounds; ++round) {
        std::size_t used = n;
        if (cfg.subsample < 1.0) {
            for (std::size_t i = n; i > 1; --i) {
                std::size_t j = static_cast<std::size_t>(
                    rng.uniform_int(static_cast<std::int64_t>(i)));
                std::swap(sample[i - 1], sample[j]);
            }
            used = std::max<std::size_t>(
                1, static_cast<std::size_t>(cfg.subsample *
                                            static_cast<double>(n)));
        }

        std::fill(pos.begin(), pos.end(), -1);
        RegressionTree tree;
        tree.nodes.emplace_back();
        LevelNode root;
        root.node_index = 0;
        for (std::size_t s = 0; s < used; ++s) {
            std::size_t i = sample[s];
            double p = sigmoid(score[i]);
            double w = data.weight(i);
            grad[i] = (p - static_cast<double>(data.label(i))) * w;
            hess[i] = p * (1.0 - p) * w;
            pos[i] = 0;
            root.sum_g += grad[i];
            root.sum_h += hess[i];
            root.count += 1;
        }

        std::vector<LevelNode> level{root};
        // node_slot[node_index] -> position in `level`, or -1 when inactive.
        std::vector<std::int32_t> node_slot{0};

        for (std::int32_t depth = 0; depth < cfg.max_depth && !level.empty();
             ++depth) {
            struct ScanState {
                double sum_g = 0.0;
                double sum_h = 0.0;
                std::int64_t count = 0;
                double last_value = 0.0;
                bool seen = false;
            };
            std::vector<ScanState> scan(level.size());

            for (std::size_t f = 0; f < dim; ++f) {
                for (auto& st : scan) {
                    st = ScanState{};
                }
                for (std::int32_t row : sorted_rows[f]) {
                    std::int32_t node = pos[static_cast<std::size_t>(row)];
                    if (node < 0 || node_slot[static_cast<std::size_t>(
                                        node)] < 0) {
                        continue;
                    }
                    std::size_t slot = static_cast<std::size_t>(
                        node_slot[static_cast<std::size_t>(node)]);
                    ScanState& st = scan[slot];
                    LevelNode& ln = level[slot];
                    double v = data.row(static_cast<std::size_t>(row))[f];
                    if (st.seen && v > st.last_value && st.count > 0 &&
                        st.count < ln.count) {
                        double gain =
                            0.5 * (leaf_objective(st.sum_g, st.sum_h, lambda) +
                                   leaf_objective(ln.sum_g - st.sum_g,
                                                  ln.sum_h - st.sum_h, lambda) -
                                   leaf_objective(ln.sum_g, ln.sum_h, lambda));
                        SplitCandidate cand{gain, static_cast<std::int32_t>(f),
                                            0.5 * (st.last_value + v)};
                        if (cand.gain > kMinSplitGain &&
                            cand.better_than(ln.best)) {
                            ln.best = cand;
                        }
                    }
                    st.sum_g += grad[static_cast<std::size_t>(row)];
                    st.sum_h += hess[static_cast<std::size_t>(row)];
                    st.count += 1;
                    st.last_value = v;
                    st.seen = true;
                }
            }

            // Materialize the chosen splits and reposition rows.
            std::vector<LevelNode> next;
            for (LevelNode& ln : level) {
                TreeNode& nd =
                    tree.nodes[static_cast<std::size_t>(ln.node_index)];
                if (ln.best.feature < 0) {
                    nd.value = -ln.sum_g / (ln.sum_h + lambda);
                    node_slot[static_cast<std::size_t>(ln.node_index)] = -1;
                    continue;
                }
                nd.feature = ln.best.feature;
                nd.threshold = ln.best.threshold;
                nd.left = static_cast<std::int32_t>(tree.nodes.size());
                nd.right = nd.left + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();

                LevelNode left_node;
                left_node.node_index = nd.left;
                LevelNode right_node;
                right_node.node_index = nd.right;
                next.push_back(left_node);
                next.push_back(right_node);
                node_slot[static_cast<std::size_t>(ln.node_index)] = -1;
                node_slot.push_back(
                    static_cast<std::int32_t>(next.size()) - 2);
                node_slot.push_back(
                    static_cast<std::int32_t>(next.size()) - 1);
            }

            if (next.empty()) {
                level.clear();
                break;
            }

            // node_slot entries for the new level point into `next`.
            for (std::size_t s = 0; s < used; ++s) {
                std::size_t i = sample[s];
                std::int32_t node = pos[i];
                if (node < 0) {
                    continue;
                }
                const TreeNode& nd =
                    tree.nodes[static_cast<std::size_t>(node)];
                if (nd.is_leaf()) {
                    pos[i] = -1;
                    continue;
                }
                std::int32_t child =
                    data.row(i)[static_cast<std::size_t>(nd.feature)] <=
                            nd.threshold
                        ? nd.left
                        : nd.right;
                pos[i] = child;
                std::size_t slot = static_cast<std::size_t>(
                    node_slot[static_cast<std::size_t>(child)]);
                next[slot].sum_g += grad[i];
                next[slot].sum_h += hess[i];
                next[slot].count += 1;
            }
            level = std::move(next);
            // Rebuild slot map for the surviving level only.
            std::fill(node_slot.begin(), node_slot.end(), -1);
            for (std::size_t s = 0; s < level.size(); ++s) {
                node_slot[static_cast<std::size_t>(level[s].node_index)] =
                    static_cast<std::int32_t>(s);
            }
        }

        // Depth limit reached: remaining active nodes become leaves.
        for (LevelNode& ln : level) {
            tree.nodes[static_cast<std::size_t>(ln.node_index)].value =
                -ln.sum_g / (ln.sum_h + lambda);
        }

        for (std::size_t i = 0; i < n; ++i) {
            score[i] += cfg.step * tree.eval(data.row(i));
        }
        oracle.trees.push_back(std::move(tree));
    }

    return oracle;
}

}  // namespace banditlab
