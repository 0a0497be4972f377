#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fwc/common.hpp"
#include "fwc/parallel.hpp"

namespace fwc {

enum class KernelType { rbf, linear };

inline const char* kernel_name(KernelType k) { return k == KernelType::rbf ? "rbf" : "linear"; }

inline KernelType kernel_from_name(const std::string& name) {
    if (name == "rbf") return KernelType::rbf;
    if (name == "linear") return KernelType::linear;
    throw DataError("unknown kernel: " + name);
}

inline double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
    if (a.size() != b.size())
        throw DataError(strf("rbf_kernel: length mismatch (%zu vs %zu)", a.size(), b.size()));
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

inline double linear_kernel(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw DataError(strf("linear_kernel: length mismatch (%zu vs %zu)", a.size(), b.size()));
    double dot = 0.0;
    for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

inline double kernel_eval(KernelType type, const std::vector<double>& a, const std::vector<double>& b,
                          double gamma) {
    return type == KernelType::rbf ? rbf_kernel(a, b, gamma) : linear_kernel(a, b);
}

// Dense symmetric kernel matrix, assembled in parallel row blocks.
inline std::vector<double> kernel_matrix(const std::vector<std::vector<double>>& rows, KernelType type,
                                         double gamma, int workers = 1) {
    const size_t n = rows.size();
    std::vector<double> k(n * n);
    parallel_for(n, workers, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i)
            for (size_t j = 0; j <= i; ++j) k[i * n + j] = kernel_eval(type, rows[i], rows[j], gamma);
    });
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) k[i * n + j] = k[j * n + i];
    return k;
}

} // namespace fwc
