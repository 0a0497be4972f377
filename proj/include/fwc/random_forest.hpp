#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fwc/parallel.hpp"
#include "fwc/rng.hpp"
#include "fwc/tree.hpp"

namespace fwc {

struct RfSpec {
    int32_t n_trees = 100;
    int32_t max_depth = 0;  // 0: unlimited
    int32_t min_leaf = 2;
    int32_t mtry = 0;       // 0: ceil(p / 3)
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) throw DataError("RfSpec: n_trees must be >= 1");
        if (max_depth < 0) throw DataError("RfSpec: max_depth must be >= 0");
        if (min_leaf < 1) throw DataError("RfSpec: min_leaf must be >= 1");
        if (mtry < 0) throw DataError("RfSpec: mtry must be >= 0");
    }
};

struct RfModel {
    std::vector<Tree> trees;

    bool operator==(const RfModel&) const = default;
};

namespace detail {

// CART regression tree over the given row set; leaf value = mean target.
// mtry features are freshly sampled per node from the tree's own stream, so
// identical (data, seed, tree index) rebuild bit-identical structures.
inline Tree grow_cart_tree(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
                           std::vector<size_t> node_rows, const RfSpec& spec, size_t n_features,
                           Rng& rng) {
    const size_t mtry = spec.mtry > 0
                            ? std::min<size_t>(static_cast<size_t>(spec.mtry), n_features)
                            : static_cast<size_t>(
                                  std::ceil(static_cast<double>(n_features) / 3.0));
    Tree tree;
    SplitScratch scratch;
    std::vector<int32_t> feature_pool(n_features);
    for (size_t f = 0; f < n_features; ++f) feature_pool[f] = static_cast<int32_t>(f);
    std::vector<int32_t> candidates(mtry);

    struct Pending {
        std::vector<size_t> rows;
        int32_t node;
        int32_t depth;
    };

    const auto make_node = [&tree]() {
        tree.nodes.emplace_back();
        return static_cast<int32_t>(tree.nodes.size() - 1);
    };

    std::vector<Pending> stack;
    stack.push_back({std::move(node_rows), make_node(), 0});
    while (!stack.empty()) {
        Pending item = std::move(stack.back());
        stack.pop_back();

        double mean = 0.0;
        for (const size_t r : item.rows) mean += targets[r];
        mean /= static_cast<double>(item.rows.size());

        SplitResult split;
        const bool depth_ok = spec.max_depth == 0 || item.depth < spec.max_depth;
        if (depth_ok && item.rows.size() >= 2 * static_cast<size_t>(spec.min_leaf)) {
            // partial Fisher-Yates draw of mtry distinct features, then sort
            // ascending so tie-breaking keys on feature index, not draw order
            for (size_t k = 0; k < mtry; ++k) {
                const size_t j = k + static_cast<size_t>(rng.bounded(n_features - k));
                std::swap(feature_pool[k], feature_pool[j]);
                candidates[k] = feature_pool[k];
            }
            std::sort(candidates.begin(), candidates.end());
            split = best_split_variance(rows, targets, item.rows, candidates,
                                        static_cast<size_t>(spec.min_leaf), scratch);
        }

        TreeNode& node = tree.nodes[static_cast<size_t>(item.node)];
        if (!split.found) {
            node.value = mean;
            continue;
        }
        node.feature = split.feature;
        node.threshold = split.threshold;

        std::vector<size_t> left, right;
        for (const size_t r : item.rows)
            (rows[r][static_cast<size_t>(split.feature)] < split.threshold ? left : right).push_back(r);
        const int32_t left_id = make_node();
        const int32_t right_id = make_node();
        // re-fetch: make_node may have reallocated the node vector
        tree.nodes[static_cast<size_t>(item.node)].left = left_id;
        tree.nodes[static_cast<size_t>(item.node)].right = right_id;
        // grow left-then-right: push right first
        stack.push_back({std::move(right), right_id, item.depth + 1});
        stack.push_back({std::move(left), left_id, item.depth + 1});
    }
    return tree;
}

} // namespace detail

inline RfModel train_rf(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                        const RfSpec& spec, int workers = 1) {
    spec.validate();
    if (x.empty() || x.size() != y.size()) throw DataError("train_rf: bad training data shape");
    const size_t n = x.size();
    const size_t p = x[0].size();

    RfModel model;
    model.trees.resize(static_cast<size_t>(spec.n_trees));
    parallel_for(static_cast<size_t>(spec.n_trees), workers, [&](size_t begin, size_t end) {
        for (size_t t = begin; t < end; ++t) {
            Rng rng(Rng::derive(spec.seed, t));
            std::vector<size_t> sample(n);
            if (spec.bootstrap) {
                for (size_t i = 0; i < n; ++i) sample[i] = static_cast<size_t>(rng.bounded(n));
            } else {
                for (size_t i = 0; i < n; ++i) sample[i] = i;
            }
            model.trees[t] = detail::grow_cart_tree(x, y, std::move(sample), spec, p, rng);
        }
    });
    return model;
}

inline double predict_rf_one(const RfModel& model, const std::vector<double>& x) {
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.predict(x);
    return sum / static_cast<double>(model.trees.size());
}

inline std::vector<double> predict_rf(const RfModel& model, const std::vector<std::vector<double>>& x,
                                      int workers = 1) {
    std::vector<double> out(x.size());
    parallel_for(x.size(), workers, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) out[i] = predict_rf_one(model, x[i]);
    });
    return out;
}

} // namespace fwc
