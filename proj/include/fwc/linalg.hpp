#pragma once

#include <cmath>
#include <vector>

namespace fwc {

// In-place Cholesky factorization of a symmetric positive-definite matrix
// (row-major n x n); only the lower triangle is referenced and written.
// Returns false on breakdown (non-positive pivot).
inline bool cholesky_factor(std::vector<double>& a, size_t n) {
    for (size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    return true;
}

// Solve L L^T x = b given the factor from cholesky_factor.
inline std::vector<double> cholesky_solve_factored(const std::vector<double>& l, size_t n,
                                                   std::vector<double> b) {
    for (size_t i = 0; i < n; ++i) { // forward: L z = b
        double s = b[i];
        for (size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
        b[i] = s / l[i * n + i];
    }
    for (size_t i = n; i-- > 0;) { // backward: L^T x = z
        double s = b[i];
        for (size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
        b[i] = s / l[i * n + i];
    }
    return b;
}

inline std::vector<double> matvec_sym(const std::vector<double>& a, size_t n,
                                      const std::vector<double>& x) {
    std::vector<double> out(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (size_t j = 0; j < n; ++j) s += a[i * n + j] * x[j];
        out[i] = s;
    }
    return out;
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace fwc
