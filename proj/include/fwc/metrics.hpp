#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fwc/common.hpp"
#include "fwc/rng.hpp"

namespace fwc {

struct SplitIndices {
    std::vector<size_t> train;
    std::vector<size_t> test;
};

// Seeded-shuffle holdout split: |train| = round(ratio * n), disjoint and
// exhaustive.
inline SplitIndices split_samples(size_t n, double ratio, std::uint64_t seed) {
    if (n < 2) throw DataError("split_samples: need at least 2 samples");
    if (!(ratio > 0.0) || !(ratio < 1.0)) throw DataError("split_samples: ratio must be in (0, 1)");
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    size_t n_train = static_cast<size_t>(std::llround(ratio * static_cast<double>(n)));
    n_train = std::min(std::max<size_t>(n_train, 1), n - 1); // keep both sides non-empty
    SplitIndices split;
    split.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
    split.test.assign(order.begin() + static_cast<long>(n_train), order.end());
    return split;
}

inline double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.empty() || y.size() != yhat.size()) throw DataError("rmse: length mismatch or empty input");
    double ss = 0.0;
    for (size_t i = 0; i < y.size(); ++i) ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(ss / static_cast<double>(y.size()));
}

// r2 = 1 - SS_res / SS_tot; may be negative, requires target variance > 0.
inline double r2(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.empty() || y.size() != yhat.size()) throw DataError("r2: length mismatch or empty input");
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        ss_tot += (y[i] - mean) * (y[i] - mean);
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    }
    if (ss_tot <= 0.0) throw DataError("r2: zero target variance");
    return 1.0 - ss_res / ss_tot;
}

// Least-squares fit line yhat = slope * y + intercept through scatter pairs,
// mirroring the usual scatterplot presentation.
inline void fit_line(const std::vector<double>& y, const std::vector<double>& yhat, double& slope,
                     double& intercept) {
    if (y.size() != yhat.size() || y.size() < 2) throw DataError("fit_line: need >= 2 pairs");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        sx += y[i];
        sy += yhat[i];
        sxx += y[i] * y[i];
        sxy += y[i] * yhat[i];
    }
    const double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-30) {
        slope = 0.0;
        intercept = sy / n;
        return;
    }
    slope = (n * sxy - sx * sy) / den;
    intercept = (sy - slope * sx) / n;
}

} // namespace fwc
