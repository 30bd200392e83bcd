// spectral.hpp — frequency-domain compression of rank blocks.
//
// Transform is the separable orthonormal 2-D DCT-II: C = D_p B D_q^T with
// D_n[k][i] = s_k cos(pi (2i+1) k / (2n)), s_0 = sqrt(1/n), s_k = sqrt(2/n).
// Orthonormality gives Parseval's identity ||C||_F = ||B||_F, which makes
// the truncation error of a block exactly the energy of the dropped
// coefficients.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qtlc/errors.hpp"
#include "qtlc/matrix.hpp"
#include "qtlc/parallel.hpp"
#include "qtlc/rank_blocks.hpp"
#include "qtlc/tiling.hpp"

namespace qtlc {

namespace detail {

inline RealMatrix dct_basis(std::size_t n) {
    RealMatrix d(n, n);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = k == 0 ? std::sqrt(inv) : std::sqrt(2.0 * inv);
        for (std::size_t i = 0; i < n; ++i) {
            d(k, i) = s * std::cos(M_PI * (2.0 * static_cast<double>(i) + 1.0) *
                                   static_cast<double>(k) * inv / 2.0);
        }
    }
    return d;
}

}  // namespace detail

inline RealMatrix dct2(const RealMatrix& b) {
    require_finite(b, "dct2 input");
    const RealMatrix dp = detail::dct_basis(b.rows);
    const RealMatrix dq = detail::dct_basis(b.cols);
    return matmul_nt(matmul(dp, b), dq);
}

inline RealMatrix idct2(const RealMatrix& c) {
    require_finite(c, "idct2 input");
    const RealMatrix dp = detail::dct_basis(c.rows);
    const RealMatrix dq = detail::dct_basis(c.cols);
    return matmul(matmul_tn(dp, c), dq);
}

struct TruncationPolicy {
    enum class Mode { threshold, energy, topk };
    Mode mode = Mode::threshold;
    double tau = 0.0;
    double eta = 0.9;
    std::size_t k = 1;

    static TruncationPolicy threshold(double tau) {
        TruncationPolicy p;
        p.mode = Mode::threshold;
        p.tau = tau;
        return p;
    }
    static TruncationPolicy energy(double eta) {
        TruncationPolicy p;
        p.mode = Mode::energy;
        p.eta = eta;
        return p;
    }
    static TruncationPolicy topk(std::size_t k) {
        TruncationPolicy p;
        p.mode = Mode::topk;
        p.k = k;
        return p;
    }
};

inline void validate_truncation_policy(const TruncationPolicy& policy) {
    switch (policy.mode) {
        case TruncationPolicy::Mode::threshold:
            if (policy.tau < 0.0) {
                throw_error(ErrorCode::config_error, "threshold policy requires tau >= 0");
            }
            break;
        case TruncationPolicy::Mode::energy:
            if (!(policy.eta > 0.0 && policy.eta <= 1.0)) {
                throw_error(ErrorCode::config_error, "energy policy requires 0 < eta <= 1");
            }
            break;
        case TruncationPolicy::Mode::topk:
            if (policy.k < 1) {
                throw_error(ErrorCode::config_error, "topk policy requires k >= 1");
            }
            break;
    }
}

struct SpectralCoefficient {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;
};

struct SpectralBlock {
    Placement placement;
    std::size_t rank = 1;
    std::string transform = "dct2";
    std::vector<SpectralCoefficient> coeffs;  // sorted by (row, col), values nonzero
};

/// Retained coefficients of C under the policy, sorted by (row, col).
/// Exact zeros are never stored. Unless C is identically zero, at least the
/// largest-magnitude coefficient survives whatever the policy says.
inline std::vector<SpectralCoefficient> truncate_coeffs(const RealMatrix& c,
                                                        const TruncationPolicy& policy) {
    require_finite(c, "truncate_coeffs input");
    validate_truncation_policy(policy);

    std::vector<SpectralCoefficient> candidates;
    double total_energy = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i) {
        for (std::size_t j = 0; j < c.cols; ++j) {
            const double v = c(i, j);
            total_energy += v * v;
            if (v != 0.0) {
                candidates.push_back({static_cast<std::uint32_t>(i),
                                      static_cast<std::uint32_t>(j), v});
            }
        }
    }
    if (candidates.empty()) return {};

    // Magnitude descending, ties by (row, col) ascending.
    std::sort(candidates.begin(), candidates.end(),
              [](const SpectralCoefficient& a, const SpectralCoefficient& b) {
                  const double ma = std::fabs(a.value);
                  const double mb = std::fabs(b.value);
                  if (ma != mb) return ma > mb;
                  if (a.row != b.row) return a.row < b.row;
                  return a.col < b.col;
              });

    std::size_t keep = 0;
    switch (policy.mode) {
        case TruncationPolicy::Mode::threshold:
            while (keep < candidates.size() &&
                   std::fabs(candidates[keep].value) > policy.tau) {
                ++keep;
            }
            break;
        case TruncationPolicy::Mode::energy: {
            double cum = 0.0;
            while (keep < candidates.size() && cum < policy.eta * total_energy) {
                cum += candidates[keep].value * candidates[keep].value;
                ++keep;
            }
            break;
        }
        case TruncationPolicy::Mode::topk:
            keep = std::min(policy.k, candidates.size());
            break;
    }
    if (keep == 0) keep = 1;

    std::vector<SpectralCoefficient> kept(candidates.begin(),
                                          candidates.begin() + static_cast<long>(keep));
    std::sort(kept.begin(), kept.end(),
              [](const SpectralCoefficient& a, const SpectralCoefficient& b) {
                  if (a.row != b.row) return a.row < b.row;
                  return a.col < b.col;
              });
    return kept;
}

/// Scatter the retained coefficients onto a p x q zero grid and invert the
/// transform.
inline RealMatrix reconstruct_block(const SpectralBlock& sb) {
    RealMatrix c(sb.placement.p, sb.placement.q);
    for (const SpectralCoefficient& sc : sb.coeffs) {
        if (sc.row >= sb.placement.p || sc.col >= sb.placement.q) {
            throw_error(ErrorCode::corrupt_block, "coefficient index out of tile bounds");
        }
        c(sc.row, sc.col) = sc.value;
    }
    return idct2(c);
}

struct CompressedLayer {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    TilingLayout layout;
    std::vector<SpectralBlock> spectral_blocks;  // placement order
    RankPolicy rank_policy;
    TruncationPolicy truncation_policy;
};

/// Full per-matrix pipeline: tile -> truncated SVD -> rebuild the rank-r
/// tile -> DCT -> truncate. Deterministic for identical inputs.
inline CompressedLayer compress_matrix(const RealMatrix& w, const TilingLayout& layout,
                                       const RankPolicy& rp, const TruncationPolicy& tp) {
    validate_truncation_policy(tp);
    const BlockSet bs = factor_blocks(w, layout, rp);

    CompressedLayer cl;
    cl.rows = w.rows;
    cl.cols = w.cols;
    cl.layout = layout;
    cl.rank_policy = rp;
    cl.truncation_policy = tp;
    cl.spectral_blocks.resize(bs.blocks.size());
    parallel_for_index(bs.blocks.size(), [&](std::size_t idx) {
        const RankBlock& block = bs.blocks[idx];
        const RealMatrix low_rank = matmul_nt(block.u, block.v);
        SpectralBlock sb;
        sb.placement = block.placement;
        sb.rank = block.rank;
        sb.coeffs = truncate_coeffs(dct2(low_rank), tp);
        cl.spectral_blocks[idx] = std::move(sb);
    });
    return cl;
}

inline RealMatrix decompress_matrix(const CompressedLayer& cl) {
    if (cl.spectral_blocks.size() != cl.layout.placements.size()) {
        throw_error(ErrorCode::corrupt_block, "block count does not match layout");
    }
    if (cl.rows != cl.layout.rows || cl.cols != cl.layout.cols) {
        throw_error(ErrorCode::shape_mismatch, "layer dims do not match layout");
    }
    RealMatrix out(cl.rows, cl.cols);
    for (const SpectralBlock& sb : cl.spectral_blocks) {
        place_submatrix(out, reconstruct_block(sb), sb.placement.row0, sb.placement.col0);
    }
    return out;
}

struct CompressionStats {
    std::size_t stored_value_count = 0;     // retained coefficient values
    std::size_t metadata_value_count = 0;   // placement/rank/index bookkeeping scalars
    double compression_ratio = 0.0;         // original / stored
    bool ratio_is_infinite = false;         // stored count hit zero
    std::vector<std::size_t> coeffs_per_tile;
    std::vector<std::size_t> rank_per_tile;
    std::map<std::size_t, std::size_t> coeff_count_histogram;
    std::map<std::size_t, std::size_t> rank_histogram;
};

inline CompressionStats compression_stats(const CompressedLayer& cl,
                                          std::size_t original_params) {
    CompressionStats st;
    for (const SpectralBlock& sb : cl.spectral_blocks) {
        st.stored_value_count += sb.coeffs.size();
        st.coeffs_per_tile.push_back(sb.coeffs.size());
        st.rank_per_tile.push_back(sb.rank);
        st.coeff_count_histogram[sb.coeffs.size()] += 1;
        st.rank_histogram[sb.rank] += 1;
        // placement (5 scalars) + rank + count, then 2 index scalars per coefficient
        st.metadata_value_count += 7 + 2 * sb.coeffs.size();
    }
    if (st.stored_value_count == 0) {
        st.ratio_is_infinite = true;
        st.compression_ratio = 0.0;
    } else {
        st.compression_ratio =
            static_cast<double>(original_params) / static_cast<double>(st.stored_value_count);
    }
    return st;
}

inline CompressionStats compression_stats(const CompressedLayer& cl) {
    return compression_stats(cl, cl.rows * cl.cols);
}

}  // namespace qtlc
