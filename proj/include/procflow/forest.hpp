#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "procflow/common.hpp"
#include "procflow/dataset.hpp"
#include "procflow/rng.hpp"

namespace procflow {

/// 1 - sum((c/n)^2); 0 for an empty node.
inline double gini_impurity(std::span<const std::size_t> counts) {
    std::size_t n = 0;
    for (std::size_t c : counts) n += c;
    if (n == 0) return 0.0;
    double sum_sq = 0.0;
    for (std::size_t c : counts)
        sum_sq += static_cast<double>(c) * static_cast<double>(c);
    const double dn = static_cast<double>(n);
    return 1.0 - sum_sq / (dn * dn);
}

/// Internal nodes hold a (feature, threshold) test with x <= threshold going
/// left; leaves hold a class histogram summing to 1.
struct TreeNode {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
    std::vector<double> histogram;

    bool is_leaf() const { return left == nullptr; }
};

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 15;
    std::size_t min_split = 2;
    std::size_t feature_subsample = 0;  // 0 means floor(sqrt(feature_count))
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) fail(ErrorCategory::config, "n_trees must be >= 1");
        if (max_depth < 1) fail(ErrorCategory::config, "max_depth must be >= 1");
        if (min_split < 2) fail(ErrorCategory::config, "min_split must be >= 2");
    }
};

struct Forest {
    std::vector<std::unique_ptr<TreeNode>> trees;
    ForestConfig config;
    LabelSpace class_names;
    std::size_t feature_count = 0;
};

namespace detail {

inline std::size_t effective_subsample(const ForestConfig &cfg,
                                       std::size_t feature_count) {
    std::size_t m = cfg.feature_subsample;
    if (m == 0)
        m = static_cast<std::size_t>(
            std::floor(std::sqrt(static_cast<double>(feature_count))));
    return std::clamp<std::size_t>(m, 1, feature_count);
}

struct TreeBuilder {
    const Matrix &x;
    const std::vector<std::size_t> &y;
    std::size_t n_classes;
    std::size_t max_depth;
    std::size_t min_split;
    std::size_t subsample;
    Rng &rng;

    std::unique_ptr<TreeNode> make_leaf(const std::vector<std::size_t> &counts,
                                        std::size_t n) const {
        auto node = std::make_unique<TreeNode>();
        node->histogram.resize(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c)
            node->histogram[c] =
                static_cast<double>(counts[c]) / static_cast<double>(n);
        return node;
    }

    std::unique_ptr<TreeNode> build(std::vector<std::size_t> &rows,
                                    std::size_t depth) {
        const std::size_t n = rows.size();
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t r : rows) ++counts[y[r]];
        std::size_t present = 0;
        for (std::size_t c : counts) present += (c > 0);

        if (depth == max_depth || n < min_split || present <= 1)
            return make_leaf(counts, n);

        // Maximizing sum(c^2)/n_side over both sides minimizes the weighted
        // Gini; strict > keeps the first optimum, so ties resolve to the
        // lowest feature index then the lowest threshold.
        auto candidates = rng.sample_without_replacement(x.cols(), subsample);
        bool found = false;
        double best_score = 0.0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;

        std::vector<std::pair<double, std::size_t>> ordered(n);
        std::vector<std::size_t> left_counts(n_classes);
        for (std::size_t f : candidates) {
            for (std::size_t i = 0; i < n; ++i)
                ordered[i] = {x.at(rows[i], f), y[rows[i]]};
            std::sort(ordered.begin(), ordered.end(),
                      [](const auto &a, const auto &b) { return a.first < b.first; });
            std::fill(left_counts.begin(), left_counts.end(), 0);
            double left_sq = 0.0, right_sq = 0.0;
            for (std::size_t c : counts)
                right_sq += static_cast<double>(c) * static_cast<double>(c);
            for (std::size_t i = 1; i < n; ++i) {
                const std::size_t cls = ordered[i - 1].second;
                const auto lc = static_cast<double>(left_counts[cls]);
                const auto rc = static_cast<double>(counts[cls] - left_counts[cls]);
                left_sq += 2.0 * lc + 1.0;
                right_sq -= 2.0 * rc - 1.0;
                ++left_counts[cls];
                if (ordered[i].first <= ordered[i - 1].first) continue;
                const double score =
                    left_sq / static_cast<double>(i) +
                    right_sq / static_cast<double>(n - i);
                if (!found || score > best_score) {
                    found = true;
                    best_score = score;
                    best_feature = f;
                    best_threshold = std::midpoint(ordered[i - 1].first,
                                                   ordered[i].first);
                }
            }
        }
        if (!found) return make_leaf(counts, n);

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            if (x.at(r, best_feature) <= best_threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        auto node = std::make_unique<TreeNode>();
        node->feature = best_feature;
        node->threshold = best_threshold;
        node->left = build(left_rows, depth + 1);
        node->right = build(right_rows, depth + 1);
        return node;
    }
};

}  // namespace detail

inline Forest train_forest(const LabeledDataset &train, const LabelSpace &space,
                           ForestConfig config = {}) {
    train.validate();
    config.validate();
    if (train.size() == 0)
        fail(ErrorCategory::validation, "train_forest: empty training set");
    const std::vector<std::size_t> y = label_indices(train, space);

    Forest forest;
    forest.config = config;
    forest.class_names = space;
    forest.feature_count = train.features.cols();
    forest.trees.resize(config.n_trees);

    const std::size_t subsample =
        detail::effective_subsample(config, forest.feature_count);
    const std::size_t n = train.size();

    parallel_for(config.n_trees, [&](std::size_t t) {
        Rng rng(derive_seed(config.seed, "tree", t));
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = rng.below(n);
        detail::TreeBuilder builder{train.features, y, space.size(),
                                    config.max_depth, config.min_split,
                                    subsample, rng};
        forest.trees[t] = builder.build(rows, 0);
    });
    return forest;
}

inline Forest train_forest(const LabeledDataset &train, ForestConfig config = {}) {
    return train_forest(train, observed_label_space(train), config);
}

struct ForestPrediction {
    std::size_t class_index = 0;
    std::vector<double> probabilities;
};

inline ForestPrediction predict_forest(const Forest &forest,
                                       std::span<const double> x) {
    if (x.size() != forest.feature_count)
        fail(ErrorCategory::shape,
             "predict_forest: input has " + std::to_string(x.size()) +
                 " features, forest expects " +
                 std::to_string(forest.feature_count));
    ForestPrediction out;
    out.probabilities.assign(forest.class_names.size(), 0.0);
    for (const auto &tree : forest.trees) {
        const TreeNode *node = tree.get();
        while (!node->is_leaf())
            node = x[node->feature] <= node->threshold ? node->left.get()
                                                       : node->right.get();
        for (std::size_t c = 0; c < out.probabilities.size(); ++c)
            out.probabilities[c] += node->histogram[c];
    }
    const double inv = 1.0 / static_cast<double>(forest.trees.size());
    for (double &p : out.probabilities) p *= inv;
    out.class_index = static_cast<std::size_t>(
        std::max_element(out.probabilities.begin(), out.probabilities.end()) -
        out.probabilities.begin());
    return out;
}

/// Per-row argmax classes for a whole matrix.
inline std::vector<std::size_t> predict_forest(const Forest &forest,
                                               const Matrix &data) {
    std::vector<std::size_t> out(data.rows());
    parallel_for(data.rows(), [&](std::size_t r) {
        out[r] = predict_forest(forest, data.row(r)).class_index;
    });
    return out;
}

/// Longest root-to-leaf path, in edges.
inline std::size_t tree_depth(const TreeNode &node) {
    if (node.is_leaf()) return 0;
    return 1 + std::max(tree_depth(*node.left), tree_depth(*node.right));
}

namespace detail {

inline nlohmann::json tree_to_json(const TreeNode &node) {
    if (node.is_leaf()) return nlohmann::json{{"hist", node.histogram}};
    return nlohmann::json{{"feature", node.feature},
                          {"threshold", node.threshold},
                          {"left", tree_to_json(*node.left)},
                          {"right", tree_to_json(*node.right)}};
}

inline std::unique_ptr<TreeNode> tree_from_json(const nlohmann::json &j,
                                                std::size_t n_classes) {
    auto node = std::make_unique<TreeNode>();
    if (j.contains("hist")) {
        node->histogram = j.at("hist").get<std::vector<double>>();
        if (node->histogram.size() != n_classes)
            fail(ErrorCategory::parse, "leaf histogram has wrong class count");
        return node;
    }
    node->feature = j.at("feature").get<std::size_t>();
    node->threshold = j.at("threshold").get<double>();
    node->left = tree_from_json(j.at("left"), n_classes);
    node->right = tree_from_json(j.at("right"), n_classes);
    return node;
}

}  // namespace detail

inline nlohmann::json forest_to_json(const Forest &forest) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto &tree : forest.trees)
        trees.push_back(detail::tree_to_json(*tree));
    return nlohmann::json{{"version", 1},
                          {"model", "forest"},
                          {"n_trees", forest.config.n_trees},
                          {"max_depth", forest.config.max_depth},
                          {"min_split", forest.config.min_split},
                          {"feature_subsample", forest.config.feature_subsample},
                          {"seed", forest.config.seed},
                          {"feature_count", forest.feature_count},
                          {"classes", forest.class_names.classes},
                          {"has_other", forest.class_names.has_other},
                          {"trees", std::move(trees)}};
}

inline Forest forest_from_json(const nlohmann::json &j) {
    if (j.at("version").get<int>() != 1)
        fail(ErrorCategory::parse, "unsupported forest version");
    Forest forest;
    forest.config.n_trees = j.at("n_trees").get<std::size_t>();
    forest.config.max_depth = j.at("max_depth").get<std::size_t>();
    forest.config.min_split = j.at("min_split").get<std::size_t>();
    forest.config.feature_subsample = j.at("feature_subsample").get<std::size_t>();
    forest.config.seed = j.at("seed").get<std::uint64_t>();
    forest.feature_count = j.at("feature_count").get<std::size_t>();
    forest.class_names.classes =
        j.at("classes").get<std::vector<std::string>>();
    forest.class_names.has_other = j.at("has_other").get<bool>();
    for (const auto &t : j.at("trees"))
        forest.trees.push_back(
            detail::tree_from_json(t, forest.class_names.size()));
    if (forest.trees.size() != forest.config.n_trees)
        fail(ErrorCategory::parse, "forest tree count disagrees with n_trees");
    return forest;
}

}  // namespace procflow
