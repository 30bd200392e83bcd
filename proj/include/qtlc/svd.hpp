// svd.hpp — truncated singular value decomposition via one-sided Jacobi.
//
// One-sided Jacobi orthogonalizes the columns of the input by plane
// rotations; the column norms converge to the singular values. It is slow on
// big matrices but exact to working precision on the tile sizes used here,
// and has no external dependencies.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "qtlc/errors.hpp"
#include "qtlc/matrix.hpp"

namespace qtlc {

struct SvdResult {
    RealMatrix u;                        // m x r, orthonormal columns
    std::vector<double> singular_values; // length r, descending, >= 0
    RealMatrix v;                        // n x r, orthonormal columns
};

namespace detail {

// Full SVD of a (m x n) with m >= n assumed by the caller; returns U (m x n),
// sigma (n), V (n x n) with A = U diag(sigma) V^T.
inline void one_sided_jacobi(RealMatrix b, RealMatrix& u_out, std::vector<double>& sigma_out,
                             RealMatrix& v_out) {
    const std::size_t m = b.rows;
    const std::size_t n = b.cols;
    RealMatrix v = identity_matrix(n);

    const double tol = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    const double bi = b(k, i);
                    const double bj = b(k, j);
                    alpha += bi * bi;
                    beta += bj * bj;
                    gamma += bi * bj;
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;

                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double sign = zeta >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;

                for (std::size_t k = 0; k < m; ++k) {
                    const double bi = b(k, i);
                    const double bj = b(k, j);
                    b(k, i) = c * bi - s * bj;
                    b(k, j) = s * bi + c * bj;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vi = v(k, i);
                    const double vj = v(k, j);
                    v(k, i) = c * vi - s * vj;
                    v(k, j) = s * vi + c * vj;
                }
            }
        }
        if (!rotated) break;
    }

    // Column norms are the singular values; normalize to get U.
    std::vector<double> sigma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += b(k, j) * b(k, j);
        sigma[j] = std::sqrt(acc);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return sigma[a] > sigma[c]; });

    RealMatrix u(m, n);
    RealMatrix v_sorted(n, n);
    std::vector<double> sigma_sorted(n);
    for (std::size_t dst = 0; dst < n; ++dst) {
        const std::size_t src = order[dst];
        sigma_sorted[dst] = sigma[src];
        for (std::size_t k = 0; k < n; ++k) v_sorted(k, dst) = v(k, src);
        if (sigma[src] > 0.0) {
            for (std::size_t k = 0; k < m; ++k) u(k, dst) = b(k, src) / sigma[src];
        }
    }

    // Zero singular values leave empty U columns; fill them with an
    // orthonormal completion so the factor stays column-orthonormal.
    for (std::size_t j = 0; j < n; ++j) {
        if (sigma_sorted[j] > 0.0) continue;
        std::size_t best_axis = 0;
        double best_norm = -1.0;
        std::vector<double> best_col;
        for (std::size_t axis = 0; axis < m; ++axis) {
            std::vector<double> cand(m, 0.0);
            cand[axis] = 1.0;
            for (std::size_t prev = 0; prev < j; ++prev) {
                double dot = 0.0;
                for (std::size_t k = 0; k < m; ++k) dot += cand[k] * u(k, prev);
                for (std::size_t k = 0; k < m; ++k) cand[k] -= dot * u(k, prev);
            }
            double norm = 0.0;
            for (double x : cand) norm += x * x;
            if (norm > best_norm) {
                best_norm = norm;
                best_axis = axis;
                best_col = std::move(cand);
            }
        }
        (void)best_axis;
        const double inv = 1.0 / std::sqrt(best_norm);
        for (std::size_t k = 0; k < m; ++k) u(k, j) = best_col[k] * inv;
    }

    u_out = std::move(u);
    sigma_out = std::move(sigma_sorted);
    v_out = std::move(v_sorted);
}

// Flip column signs so each U column's largest-magnitude entry is
// nonnegative, keeping factorizations reproducible.
inline void normalize_signs(RealMatrix& u, RealMatrix& v) {
    for (std::size_t j = 0; j < u.cols; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < u.rows; ++i) {
            const double a = std::abs(u(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < u.rows; ++i) u(i, j) = -u(i, j);
            for (std::size_t i = 0; i < v.rows; ++i) v(i, j) = -v(i, j);
        }
    }
}

}  // namespace detail

/// Full SVD (rank = min(rows, cols)).
inline SvdResult svd_full(const RealMatrix& a) {
    require_finite(a, "svd input");
    if (a.rows == 0 || a.cols == 0) {
        throw_error(ErrorCode::invalid_input, "svd input has a zero dimension");
    }
    SvdResult r;
    if (a.rows >= a.cols) {
        detail::one_sided_jacobi(a, r.u, r.singular_values, r.v);
    } else {
        detail::one_sided_jacobi(transpose(a), r.v, r.singular_values, r.u);
    }
    detail::normalize_signs(r.u, r.v);
    return r;
}

/// Best rank-r approximation factors of a. Throws invalid_rank unless
/// 1 <= r <= min(rows, cols).
inline SvdResult svd_truncated(const RealMatrix& a, std::size_t r) {
    const std::size_t full = std::min(a.rows, a.cols);
    if (r < 1 || r > full) {
        throw_error(ErrorCode::invalid_rank, "rank out of range for svd_truncated");
    }
    SvdResult f = svd_full(a);
    if (r == full) return f;
    SvdResult t;
    t.singular_values.assign(f.singular_values.begin(), f.singular_values.begin() + r);
    t.u = RealMatrix(a.rows, r);
    t.v = RealMatrix(a.cols, r);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < r; ++j) t.u(i, j) = f.u(i, j);
    for (std::size_t i = 0; i < a.cols; ++i)
        for (std::size_t j = 0; j < r; ++j) t.v(i, j) = f.v(i, j);
    return t;
}

/// U diag(s) V^T.
inline RealMatrix svd_reconstruct(const SvdResult& r) {
    RealMatrix us = r.u;
    for (std::size_t i = 0; i < us.rows; ++i)
        for (std::size_t j = 0; j < us.cols; ++j) us(i, j) *= r.singular_values[j];
    return matmul_nt(us, r.v);
}

}  // namespace qtlc
