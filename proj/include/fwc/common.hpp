#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace fwc {

// Bad or inconsistent data: unreadable files, violated invariants,
// mismatched geometries. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: factorization breakdown, non-finite values where
// finite ones are required. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// printf-style formatting into a std::string (gcc 11 has no <format>).
template <typename... Args>
std::string strf(const char* fmt, Args... args) {
    const int n = std::snprintf(nullptr, 0, fmt, args...);
    std::string out(static_cast<size_t>(n), '\0');
    std::snprintf(out.data(), out.size() + 1, fmt, args...);
    return out;
}

inline std::string strf(const char* fmt) { return std::string(fmt); }

} // namespace fwc
