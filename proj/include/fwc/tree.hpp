#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "fwc/common.hpp"

namespace fwc {

// Binary regression tree. Rows with feature < threshold go left; thresholds
// are midpoints between consecutive distinct sorted feature values.
struct TreeNode {
    int32_t feature = -1; // -1: leaf
    double threshold = 0.0;
    double value = 0.0;   // leaf value
    int32_t left = -1;
    int32_t right = -1;

    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const std::vector<double>& row) const {
        int32_t at = 0;
        for (;;) {
            const TreeNode& node = nodes[static_cast<size_t>(at)];
            if (node.feature < 0) return node.value;
            at = row[static_cast<size_t>(node.feature)] < node.threshold ? node.left : node.right;
        }
    }

    bool operator==(const Tree&) const = default;
};

struct SplitResult {
    bool found = false;
    int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

namespace detail {

// Sorted (value, statistic...) views of one feature over the node rows.
struct SplitScratch {
    std::vector<std::pair<double, size_t>> order; // feature value, row index
};

} // namespace detail

// Variance-reduction split: maximize N Var(parent) - N_L Var(L) - N_R Var(R),
// equivalently S_L^2/n_L + S_R^2/n_R - S^2/N over target sums S. Candidate
// features are scanned in ascending index and thresholds in ascending value,
// with strictly-greater gain required, so ties resolve to the lowest feature
// index and lowest threshold.
inline SplitResult best_split_variance(const std::vector<std::vector<double>>& rows,
                                       const std::vector<double>& targets,
                                       const std::vector<size_t>& node_rows,
                                       const std::vector<int32_t>& candidate_features,
                                       size_t min_leaf, detail::SplitScratch& scratch) {
    SplitResult best;
    const size_t n = node_rows.size();
    if (n < 2 * min_leaf) return best;

    double total = 0.0;
    for (const size_t r : node_rows) total += targets[r];
    const double parent_term = total * total / static_cast<double>(n);

    for (const int32_t f : candidate_features) {
        auto& order = scratch.order;
        order.clear();
        for (const size_t r : node_rows) order.emplace_back(rows[r][static_cast<size_t>(f)], r);
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double left_sum = 0.0;
        for (size_t k = 0; k + 1 < n; ++k) {
            left_sum += targets[order[k].second];
            if (order[k].first == order[k + 1].first) continue; // not a distinct-value boundary
            const size_t n_left = k + 1;
            const size_t n_right = n - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                right_sum * right_sum / static_cast<double>(n_right) - parent_term;
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (order[k].first + order[k + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

// Second-order split: maximize
//   1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma_split,
// requiring each child's hessian sum to reach min_child_weight and a strictly
// positive penalized gain.
inline SplitResult best_split_gbt(const std::vector<std::vector<double>>& rows,
                                  const std::vector<double>& grad, const std::vector<double>& hess,
                                  const std::vector<size_t>& node_rows,
                                  const std::vector<int32_t>& candidate_features, double lambda,
                                  double gamma_split, double min_child_weight,
                                  detail::SplitScratch& scratch) {
    SplitResult best;
    const size_t n = node_rows.size();
    if (n < 2) return best;

    double g_total = 0.0, h_total = 0.0;
    for (const size_t r : node_rows) {
        g_total += grad[r];
        h_total += hess[r];
    }
    const double parent_term = g_total * g_total / (h_total + lambda);

    for (const int32_t f : candidate_features) {
        auto& order = scratch.order;
        order.clear();
        for (const size_t r : node_rows) order.emplace_back(rows[r][static_cast<size_t>(f)], r);
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double g_left = 0.0, h_left = 0.0;
        for (size_t k = 0; k + 1 < n; ++k) {
            g_left += grad[order[k].second];
            h_left += hess[order[k].second];
            if (order[k].first == order[k + 1].first) continue;
            const double g_right = g_total - g_left;
            const double h_right = h_total - h_left;
            if (h_left < min_child_weight || h_right < min_child_weight) continue;
            const double gain = 0.5 * (g_left * g_left / (h_left + lambda) +
                                       g_right * g_right / (h_right + lambda) - parent_term) -
                                gamma_split;
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (order[k].first + order[k + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

// GBT leaf weight: w* = -G / (H + lambda).
inline double gbt_leaf_weight(double g_sum, double h_sum, double lambda) {
    return -g_sum / (h_sum + lambda);
}

} // namespace fwc
