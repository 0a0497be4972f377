#pragma once

#include <cstdint>
#include <vector>

#include "fwc/parallel.hpp"
#include "fwc/rng.hpp"
#include "fwc/tree.hpp"

namespace fwc {

struct GbtSpec {
    int32_t n_rounds = 200;
    double learning_rate = 0.1; // eta
    int32_t max_depth = 6;      // 0: unlimited
    double lambda = 1.0;        // leaf L2 penalty
    double gamma_split = 0.0;   // minimum penalized gain
    double min_child_weight = 1.0;
    std::uint64_t seed = 0;     // reserved for future subsampling

    void validate() const {
        if (n_rounds < 1) throw DataError("GbtSpec: n_rounds must be >= 1");
        if (!(learning_rate > 0.0)) throw DataError("GbtSpec: learning_rate must be > 0");
        if (max_depth < 0) throw DataError("GbtSpec: max_depth must be >= 0");
        if (lambda < 0.0) throw DataError("GbtSpec: lambda must be >= 0");
        if (gamma_split < 0.0) throw DataError("GbtSpec: gamma_split must be >= 0");
        if (min_child_weight < 0.0) throw DataError("GbtSpec: min_child_weight must be >= 0");
    }
};

struct GbtModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;
    std::vector<double> training_loss; // sum of squared errors after each round

    bool operator==(const GbtModel&) const = default;
};

namespace detail {

// One boosting tree on (g, h) statistics; leaves carry w* = -G/(H+lambda).
// Fills leaf_of with the leaf node index of every training row.
inline Tree grow_gbt_tree(const std::vector<std::vector<double>>& rows, const std::vector<double>& grad,
                          const std::vector<double>& hess, const GbtSpec& spec,
                          std::vector<int32_t>& leaf_of) {
    const size_t n = rows.size();
    const size_t p = rows[0].size();
    std::vector<int32_t> all_features(p);
    for (size_t f = 0; f < p; ++f) all_features[f] = static_cast<int32_t>(f);

    Tree tree;
    SplitScratch scratch;
    leaf_of.assign(n, -1);

    struct Pending {
        std::vector<size_t> rows;
        int32_t node;
        int32_t depth;
    };
    const auto make_node = [&tree]() {
        tree.nodes.emplace_back();
        return static_cast<int32_t>(tree.nodes.size() - 1);
    };

    std::vector<size_t> root_rows(n);
    for (size_t i = 0; i < n; ++i) root_rows[i] = i;

    std::vector<Pending> stack;
    stack.push_back({std::move(root_rows), make_node(), 0});
    while (!stack.empty()) {
        Pending item = std::move(stack.back());
        stack.pop_back();

        SplitResult split;
        if (spec.max_depth == 0 || item.depth < spec.max_depth)
            split = best_split_gbt(rows, grad, hess, item.rows, all_features, spec.lambda,
                                   spec.gamma_split, spec.min_child_weight, scratch);

        if (!split.found) {
            double g_sum = 0.0, h_sum = 0.0;
            for (const size_t r : item.rows) {
                g_sum += grad[r];
                h_sum += hess[r];
                leaf_of[r] = item.node;
            }
            tree.nodes[static_cast<size_t>(item.node)].value =
                gbt_leaf_weight(g_sum, h_sum, spec.lambda);
            continue;
        }

        tree.nodes[static_cast<size_t>(item.node)].feature = split.feature;
        tree.nodes[static_cast<size_t>(item.node)].threshold = split.threshold;
        std::vector<size_t> left, right;
        for (const size_t r : item.rows)
            (rows[r][static_cast<size_t>(split.feature)] < split.threshold ? left : right).push_back(r);
        const int32_t left_id = make_node();
        const int32_t right_id = make_node();
        tree.nodes[static_cast<size_t>(item.node)].left = left_id;
        tree.nodes[static_cast<size_t>(item.node)].right = right_id;
        stack.push_back({std::move(right), right_id, item.depth + 1});
        stack.push_back({std::move(left), left_id, item.depth + 1});
    }
    return tree;
}

} // namespace detail

// Squared-error boosting with second-order statistics g_i = yhat_i - y_i,
// h_i = 1, starting from the target mean.
inline GbtModel train_gbt(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                          const GbtSpec& spec, int /*workers*/ = 1) {
    spec.validate();
    if (x.empty() || x.size() != y.size()) throw DataError("train_gbt: bad training data shape");
    const size_t n = x.size();

    GbtModel model;
    model.learning_rate = spec.learning_rate;
    double mean = 0.0;
    for (const double v : y) mean += v;
    model.base_score = mean / static_cast<double>(n);

    std::vector<double> yhat(n, model.base_score);
    std::vector<double> grad(n), hess(n, 1.0);
    std::vector<int32_t> leaf_of;
    for (int32_t round = 0; round < spec.n_rounds; ++round) {
        for (size_t i = 0; i < n; ++i) grad[i] = yhat[i] - y[i];
        Tree tree = detail::grow_gbt_tree(x, grad, hess, spec, leaf_of);
        for (size_t i = 0; i < n; ++i)
            yhat[i] += spec.learning_rate * tree.nodes[static_cast<size_t>(leaf_of[i])].value;
        model.trees.push_back(std::move(tree));

        double loss = 0.0;
        for (size_t i = 0; i < n; ++i) loss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        model.training_loss.push_back(loss);
    }
    return model;
}

inline double predict_gbt_one(const GbtModel& model, const std::vector<double>& x) {
    double pred = model.base_score;
    for (const auto& tree : model.trees) pred += model.learning_rate * tree.predict(x);
    return pred;
}

inline std::vector<double> predict_gbt(const GbtModel& model, const std::vector<std::vector<double>>& x,
                                       int workers = 1) {
    std::vector<double> out(x.size());
    parallel_for(x.size(), workers, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) out[i] = predict_gbt_one(model, x[i]);
    });
    return out;
}

} // namespace fwc
