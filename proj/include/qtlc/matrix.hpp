// matrix.hpp — dense row-major double matrix plus the small set of kernels
// the rest of the library is built on (products, transposes, submatrix
// extraction, Frobenius norm).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qtlc/errors.hpp"
#include "qtlc/rng.hpp"

namespace qtlc {

struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major, rows * cols entries

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    RealMatrix(std::size_t r, std::size_t c, std::vector<double> v)
        : rows(r), cols(c), values(std::move(v)) {
        if (values.size() != rows * cols) {
            throw_error(ErrorCode::shape_mismatch, "value count does not match rows*cols");
        }
    }

    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return at(i, j); }
    double operator()(std::size_t i, std::size_t j) const { return at(i, j); }

    double* row_ptr(std::size_t i) { return values.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return values.data() + i * cols; }

    std::size_t size() const noexcept { return values.size(); }

    bool same_shape(const RealMatrix& other) const noexcept {
        return rows == other.rows && cols == other.cols;
    }
};

inline bool all_finite(const RealMatrix& a) noexcept {
    for (double v : a.values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline void require_finite(const RealMatrix& a, const std::string& what) {
    if (!all_finite(a)) {
        throw_error(ErrorCode::invalid_input, what + " contains non-finite values");
    }
}

inline RealMatrix random_matrix(std::size_t rows, std::size_t cols, SeededRng& rng,
                                double stddev = 1.0) {
    RealMatrix m(rows, cols);
    for (double& v : m.values) v = rng.next_normal(0.0, stddev);
    return m;
}

inline RealMatrix identity_matrix(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline RealMatrix transpose(const RealMatrix& a) {
    RealMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

/// C = A * B
inline RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols != b.rows) {
        throw_error(ErrorCode::shape_mismatch, "matmul inner dimensions differ");
    }
    RealMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

/// C = A * B^T
inline RealMatrix matmul_nt(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols != b.cols) {
        throw_error(ErrorCode::shape_mismatch, "matmul_nt inner dimensions differ");
    }
    RealMatrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

/// C = A^T * B
inline RealMatrix matmul_tn(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows != b.rows) {
        throw_error(ErrorCode::shape_mismatch, "matmul_tn inner dimensions differ");
    }
    RealMatrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row_ptr(k);
        const double* brow = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

inline void add_in_place(RealMatrix& a, const RealMatrix& b) {
    if (!a.same_shape(b)) throw_error(ErrorCode::shape_mismatch, "add_in_place shape mismatch");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
}

inline void axpy_in_place(RealMatrix& a, double alpha, const RealMatrix& b) {
    if (!a.same_shape(b)) throw_error(ErrorCode::shape_mismatch, "axpy_in_place shape mismatch");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += alpha * b.values[i];
}

inline void scale_in_place(RealMatrix& a, double alpha) {
    for (double& v : a.values) v *= alpha;
}

inline RealMatrix subtract(const RealMatrix& a, const RealMatrix& b) {
    if (!a.same_shape(b)) throw_error(ErrorCode::shape_mismatch, "subtract shape mismatch");
    RealMatrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.values.size(); ++i) c.values[i] = a.values[i] - b.values[i];
    return c;
}

inline RealMatrix submatrix(const RealMatrix& a, std::size_t row0, std::size_t col0,
                            std::size_t p, std::size_t q) {
    if (row0 + p > a.rows || col0 + q > a.cols) {
        throw_error(ErrorCode::shape_mismatch, "submatrix exceeds host bounds");
    }
    RealMatrix s(p, q);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) s(i, j) = a(row0 + i, col0 + j);
    return s;
}

inline void place_submatrix(RealMatrix& dest, const RealMatrix& block, std::size_t row0,
                            std::size_t col0) {
    if (row0 + block.rows > dest.rows || col0 + block.cols > dest.cols) {
        throw_error(ErrorCode::shape_mismatch, "placed block exceeds host bounds");
    }
    for (std::size_t i = 0; i < block.rows; ++i)
        for (std::size_t j = 0; j < block.cols; ++j) dest(row0 + i, col0 + j) = block(i, j);
}

inline double frobenius_norm(const RealMatrix& a) {
    require_finite(a, "frobenius_norm input");
    double acc = 0.0;
    for (double v : a.values) acc += v * v;
    return std::sqrt(acc);
}

inline double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
    if (!a.same_shape(b)) throw_error(ErrorCode::shape_mismatch, "max_abs_diff shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    }
    return m;
}

}  // namespace qtlc
