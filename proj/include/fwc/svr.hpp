#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fwc/kernels.hpp"

namespace fwc {

struct SvrSpec {
    double cost = 10.0;   // C
    double epsilon = 0.01;
    double gamma = 0.0;   // 0 -> 1/n_features
    double tol = 1e-3;
    int64_t max_iter = 100000; // pair updates
    KernelType kernel = KernelType::rbf;

    void validate() const {
        if (!(cost > 0.0)) throw DataError("SvrSpec: C must be > 0");
        if (epsilon < 0.0) throw DataError("SvrSpec: epsilon must be >= 0");
        if (gamma < 0.0) throw DataError("SvrSpec: gamma must be >= 0");
        if (!(tol > 0.0)) throw DataError("SvrSpec: tol must be > 0");
        if (max_iter < 1) throw DataError("SvrSpec: max_iter must be >= 1");
    }
};

struct SvrModel {
    std::vector<std::vector<double>> support;
    std::vector<double> support_beta; // alpha_i - alpha_i^, nonzero rows only
    double bias = 0.0;
    double gamma = 0.0;
    KernelType kernel = KernelType::rbf;
    bool converged = true; // false: stopped at max_iter, caller decides
    int64_t iterations = 0;

    bool operator==(const SvrModel&) const = default;
};

// Fit diagnostics over the full training set (the model itself keeps only
// the support rows).
struct SvrFitInfo {
    std::vector<double> beta; // per training row
    double bias = 0.0;
    double kkt_gap = 0.0;     // m(a) - M(a) at termination
    int64_t iterations = 0;
    bool converged = true;
    double dual_objective = 0.0;
};

// epsilon-insensitive SVR dual solved by SMO over the 2n box variables
// (alpha, alpha*): minimize 1/2 b^T K b + eps sum(a) - y^T b subject to
// 0 <= a <= C and sum(b) = 0, with b = alpha - alpha*. Each iteration picks
// the maximal KKT-violating pair (lowest index on ties) and solves the
// two-variable subproblem analytically.
inline SvrModel train_svr(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                          const SvrSpec& spec, int workers = 1, SvrFitInfo* info = nullptr) {
    spec.validate();
    if (x.empty() || x.size() != y.size()) throw DataError("train_svr: bad training data shape");
    for (const auto& row : x)
        for (const double v : row)
            if (!std::isfinite(v)) throw DataError("train_svr: non-finite feature value");
    for (const double v : y)
        if (!std::isfinite(v)) throw DataError("train_svr: non-finite target value");

    const size_t n = x.size();
    const size_t m2 = 2 * n;
    const double c = spec.cost;
    const double gamma =
        spec.gamma > 0.0 ? spec.gamma : 1.0 / static_cast<double>(std::max<size_t>(x[0].size(), 1));
    const std::vector<double> kmat = kernel_matrix(x, spec.kernel, gamma, workers);

    const auto sgn = [n](size_t t) { return t < n ? 1.0 : -1.0; };
    const auto smp = [n](size_t t) { return t < n ? t : t - n; };

    std::vector<double> a(m2, 0.0);
    std::vector<double> grad(m2);
    for (size_t t = 0; t < m2; ++t) grad[t] = spec.epsilon - sgn(t) * y[smp(t)];

    double gap = 0.0, rho = 0.0;
    int64_t iter = 0;
    bool converged = false;
    for (;;) {
        // maximal violating pair over v_t = -sign_t * grad_t
        size_t t_up = m2, t_low = m2;
        double v_up = -1e300, v_low = 1e300;
        for (size_t t = 0; t < m2; ++t) {
            const double v = -sgn(t) * grad[t];
            const bool in_up = sgn(t) > 0 ? a[t] < c : a[t] > 0.0;
            const bool in_low = sgn(t) > 0 ? a[t] > 0.0 : a[t] < c;
            if (in_up && v > v_up) {
                v_up = v;
                t_up = t;
            }
            if (in_low && v < v_low) {
                v_low = v;
                t_low = t;
            }
        }
        gap = v_up - v_low;
        rho = 0.5 * (v_up + v_low);
        if (gap < spec.tol) {
            converged = true;
            break;
        }
        if (iter >= spec.max_iter) break;

        const size_t i = smp(t_up), j = smp(t_low);
        const double s1 = sgn(t_up), s2 = sgn(t_low);
        const double g_dir = grad[t_up] - s1 * s2 * grad[t_low];
        const double eta = kmat[i * n + i] + kmat[j * n + j] - 2.0 * kmat[i * n + j];

        // box limits for the step d on a[t_up] (a[t_low] moves by -s1*s2*d)
        double lo = -a[t_up], hi = c - a[t_up];
        if (s1 * s2 > 0.0) {
            lo = std::max(lo, a[t_low] - c);
            hi = std::min(hi, a[t_low]);
        } else {
            lo = std::max(lo, -a[t_low]);
            hi = std::min(hi, c - a[t_low]);
        }
        double d;
        if (eta > 1e-12) {
            d = std::clamp(-g_dir / eta, lo, hi);
        } else {
            d = g_dir < 0.0 ? hi : lo;
        }
        a[t_up] = std::clamp(a[t_up] + d, 0.0, c);
        a[t_low] = std::clamp(a[t_low] - s1 * s2 * d, 0.0, c);

        const double delta_beta = s1 * d; // beta_i changes by this, beta_j by its negation
        for (size_t t = 0; t < m2; ++t)
            grad[t] += sgn(t) * delta_beta * (kmat[smp(t) * n + i] - kmat[smp(t) * n + j]);
        iter++;
    }

    std::vector<double> beta(n);
    for (size_t i = 0; i < n; ++i) beta[i] = a[i] - a[n + i];

    SvrModel model;
    model.gamma = gamma;
    model.kernel = spec.kernel;
    model.bias = rho;
    model.converged = converged;
    model.iterations = iter;
    for (size_t i = 0; i < n; ++i) {
        if (beta[i] == 0.0) continue;
        model.support.push_back(x[i]);
        model.support_beta.push_back(beta[i]);
    }

    if (info) {
        info->beta = beta;
        info->bias = rho;
        info->kkt_gap = gap;
        info->iterations = iter;
        info->converged = converged;
        double quad = 0.0, lin = 0.0;
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < n; ++j) quad += beta[i] * kmat[i * n + j] * beta[j];
            lin += spec.epsilon * (a[i] + a[n + i]) - y[i] * beta[i];
        }
        info->dual_objective = 0.5 * quad + lin;
    }
    return model;
}

inline double predict_svr_one(const SvrModel& model, const std::vector<double>& x) {
    double pred = model.bias;
    for (size_t i = 0; i < model.support.size(); ++i)
        pred += model.support_beta[i] * kernel_eval(model.kernel, x, model.support[i], model.gamma);
    return pred;
}

inline std::vector<double> predict_svr(const SvrModel& model, const std::vector<std::vector<double>>& x,
                                       int workers = 1) {
    std::vector<double> out(x.size());
    parallel_for(x.size(), workers, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) out[i] = predict_svr_one(model, x[i]);
    });
    return out;
}

// Largest violation of the epsilon-KKT conditions over the training set:
// free rows must sit inside the epsilon tube (within slack), rows at +/-C
// must have the residual on the matching side.
inline double svr_kkt_violation(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                const SvrSpec& spec, const std::vector<double>& beta, double bias,
                                double gamma) {
    const size_t n = x.size();
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double f = bias;
        for (size_t j = 0; j < n; ++j)
            f += beta[j] * kernel_eval(spec.kernel, x[i], x[j], gamma);
        const double r = f - y[i];
        const double bound_slack = 1e-9 * spec.cost;
        if (std::abs(beta[i]) < spec.cost - bound_slack) {
            worst = std::max(worst, std::abs(r) - spec.epsilon);
        } else if (beta[i] > 0.0) {
            // at +C: prediction must undershoot by at least epsilon
            worst = std::max(worst, (y[i] - f < spec.epsilon) ? spec.epsilon - (y[i] - f) : 0.0);
        } else {
            worst = std::max(worst, (f - y[i] < spec.epsilon) ? spec.epsilon - (f - y[i]) : 0.0);
        }
    }
    return worst;
}

} // namespace fwc
