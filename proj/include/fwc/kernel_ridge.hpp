#pragma once

#include <cmath>
#include <vector>

#include "fwc/kernels.hpp"
#include "fwc/linalg.hpp"

namespace fwc {

struct KrSpec {
    double alpha = 1e-3;
    double gamma = 0.0; // 0 -> 1/n_features, resolved at fit time
    KernelType kernel = KernelType::rbf;

    void validate() const {
        if (!(alpha > 0.0)) throw DataError("KrSpec: alpha must be > 0");
        if (gamma < 0.0) throw DataError("KrSpec: gamma must be >= 0");
    }
};

struct KrModel {
    std::vector<std::vector<double>> support;  // training rows
    std::vector<double> coef;                  // dual coefficients
    double gamma = 0.0;
    KernelType kernel = KernelType::rbf;
    double jitter_used = 0.0;    // extra diagonal needed by the factorization
    double residual_norm = 0.0;  // ||(K + alpha I) c - y|| at fit

    bool operator==(const KrModel&) const = default;
};

// Fit (K + alpha I) c = y by Cholesky. If the factorization breaks down the
// diagonal is jittered (1e-10 escalating tenfold to 1e-6); the solution is
// then polished by iterative refinement against the unjittered system so the
// fit-residual contract still holds.
inline KrModel train_kr(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                        const KrSpec& spec, int workers = 1) {
    spec.validate();
    if (x.empty() || x.size() != y.size()) throw DataError("train_kr: bad training data shape");
    for (const auto& row : x)
        for (const double v : row)
            if (!std::isfinite(v)) throw DataError("train_kr: non-finite feature value");
    for (const double v : y)
        if (!std::isfinite(v)) throw DataError("train_kr: non-finite target value");

    KrModel model;
    model.kernel = spec.kernel;
    model.gamma = spec.gamma > 0.0 ? spec.gamma : 1.0 / static_cast<double>(std::max<size_t>(x[0].size(), 1));
    model.support = x;

    const size_t n = x.size();
    std::vector<double> system = kernel_matrix(x, spec.kernel, model.gamma, workers);
    for (size_t i = 0; i < n; ++i) system[i * n + i] += spec.alpha;

    std::vector<double> factor;
    double jitter = 0.0;
    for (;;) {
        factor = system;
        if (jitter > 0.0)
            for (size_t i = 0; i < n; ++i) factor[i * n + i] += jitter;
        if (cholesky_factor(factor, n)) break;
        jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
        if (jitter > 1e-6 * 1.0000001)
            throw NumericalError("train_kr: Cholesky failed with maximum diagonal jitter (1e-6)");
    }
    model.jitter_used = jitter;

    model.coef = cholesky_solve_factored(factor, n, y);

    const double tol = 1e-8 * (norm2(y) + 1.0);
    for (int refine = 0; refine < 30; ++refine) {
        std::vector<double> residual = matvec_sym(system, n, model.coef);
        for (size_t i = 0; i < n; ++i) residual[i] = y[i] - residual[i];
        model.residual_norm = norm2(residual);
        if (model.residual_norm <= 0.5 * tol) break;
        const auto correction = cholesky_solve_factored(factor, n, residual);
        for (size_t i = 0; i < n; ++i) model.coef[i] += correction[i];
    }
    if (model.residual_norm > tol)
        throw NumericalError(strf("train_kr: residual %g exceeds %g after refinement",
                                  model.residual_norm, tol));
    return model;
}

inline double predict_kr_one(const KrModel& model, const std::vector<double>& x) {
    double pred = 0.0;
    for (size_t i = 0; i < model.support.size(); ++i)
        pred += model.coef[i] * kernel_eval(model.kernel, x, model.support[i], model.gamma);
    return pred;
}

inline std::vector<double> predict_kr(const KrModel& model, const std::vector<std::vector<double>>& x,
                                      int workers = 1) {
    std::vector<double> out(x.size());
    parallel_for(x.size(), workers, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) out[i] = predict_kr_one(model, x[i]);
    });
    return out;
}

} // namespace fwc
