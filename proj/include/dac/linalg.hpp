#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dac/errors.hpp"

namespace dac {

using Vec = std::vector<double>;

// Dense row-major matrix, just enough for MLP weights.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline void matvec_add(const Matrix& w, const Vec& x, const Vec& b, Vec& out) {
    out.resize(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* row = &w.data[r * w.cols];
        double acc = b[r];
        for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

inline double dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec concat(const Vec& a, const Vec& b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline Vec concat(const Vec& a, const Vec& b, const Vec& c) {
    Vec out;
    out.reserve(a.size() + b.size() + c.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

inline void clamp_inplace(Vec& v, double lo, double hi) {
    for (auto& x : v) x = x < lo ? lo : (x > hi ? hi : x);
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require_dim(const Vec& v, std::size_t n, const char* what) {
    if (v.size() != n)
        throw ContractViolation(std::string(what) + ": expected dimension " + std::to_string(n) +
                                ", got " + std::to_string(v.size()));
}

} // namespace dac
