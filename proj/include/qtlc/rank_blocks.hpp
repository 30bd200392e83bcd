// rank_blocks.hpp — per-tile truncated-SVD factorization under a rank policy.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "qtlc/errors.hpp"
#include "qtlc/matrix.hpp"
#include "qtlc/parallel.hpp"
#include "qtlc/svd.hpp"
#include "qtlc/tiling.hpp"

namespace qtlc {

struct RankPolicy {
    enum class Mode { fixed, energy };
    Mode mode = Mode::energy;
    std::size_t fixed_rank = 1;
    double epsilon = 0.95;
    // Optional cap for the energy mode; min(p,q) always applies on top.
    std::optional<std::size_t> r_max;

    static RankPolicy fixed(std::size_t r) {
        RankPolicy p;
        p.mode = Mode::fixed;
        p.fixed_rank = r;
        return p;
    }
    static RankPolicy energy(double eps = 0.95, std::optional<std::size_t> cap = std::nullopt) {
        RankPolicy p;
        p.mode = Mode::energy;
        p.epsilon = eps;
        p.r_max = cap;
        return p;
    }
};

inline void validate_rank_policy(const RankPolicy& policy) {
    if (policy.mode == RankPolicy::Mode::fixed) {
        if (policy.fixed_rank < 1) {
            throw_error(ErrorCode::config_error, "fixed rank policy requires r >= 1");
        }
    } else {
        if (!(policy.epsilon > 0.0 && policy.epsilon <= 1.0)) {
            throw_error(ErrorCode::config_error, "energy rank policy requires 0 < epsilon <= 1");
        }
        if (policy.r_max && *policy.r_max < 1) {
            throw_error(ErrorCode::config_error, "energy rank policy requires r_max >= 1");
        }
    }
}

struct RankBlock {
    Placement placement;
    std::size_t rank = 1;
    RealMatrix u;  // p x rank, singular values folded in
    RealMatrix v;  // q x rank
    std::vector<double> singular_values;  // kept as metadata, length = rank
};

struct BlockSet {
    TilingLayout layout;
    std::vector<RankBlock> blocks;  // one per placement, in placement order
};

/// Rank for one tile given its singular spectrum. Fixed mode caps at
/// min(p,q); energy mode picks the smallest r whose cumulative squared
/// energy reaches epsilon of the total, then caps. An all-zero spectrum
/// maps to rank 1.
inline std::size_t assign_rank(const std::vector<double>& singular_values,
                               const RankPolicy& policy, std::size_t p, std::size_t q) {
    if (singular_values.empty()) {
        throw_error(ErrorCode::invalid_input, "assign_rank: empty spectrum");
    }
    validate_rank_policy(policy);
    const std::size_t dim_cap = std::min(p, q);
    if (policy.mode == RankPolicy::Mode::fixed) {
        return std::min(policy.fixed_rank, dim_cap);
    }
    double total = 0.0;
    for (double s : singular_values) total += s * s;
    if (total == 0.0) return 1;
    std::size_t r = singular_values.size();
    double cum = 0.0;
    for (std::size_t i = 0; i < singular_values.size(); ++i) {
        cum += singular_values[i] * singular_values[i];
        if (cum >= policy.epsilon * total) {
            r = i + 1;
            break;
        }
    }
    if (policy.r_max) r = std::min(r, *policy.r_max);
    return std::min(std::max<std::size_t>(r, 1), dim_cap);
}

/// Factor every tile of the layout. Each tile gets a full SVD (the energy
/// policy needs the whole spectrum), then the assigned leading rank is kept
/// with singular values folded into U_i. Zero tiles become rank-1 blocks
/// with zero factors.
inline BlockSet factor_blocks(const RealMatrix& w, const TilingLayout& layout,
                              const RankPolicy& policy) {
    if (w.rows != layout.rows || w.cols != layout.cols) {
        throw_error(ErrorCode::shape_mismatch, "factor_blocks: matrix/layout dims differ");
    }
    validate_rank_policy(policy);
    const LayoutReport lr = validate_layout(layout);
    if (!lr.ok) {
        throw_error(ErrorCode::invalid_input, "factor_blocks: layout is not an exact cover");
    }

    BlockSet bs;
    bs.layout = layout;
    bs.blocks.resize(layout.placements.size());
    parallel_for_index(layout.placements.size(), [&](std::size_t idx) {
        const Placement& pl = layout.placements[idx];
        const RealMatrix tile = submatrix(w, pl.row0, pl.col0, pl.p, pl.q);
        RankBlock block;
        block.placement = pl;
        const SvdResult full = svd_full(tile);
        if (full.singular_values.empty() || full.singular_values[0] == 0.0) {
            block.rank = 1;
            block.u = RealMatrix(pl.p, 1);
            block.v = RealMatrix(pl.q, 1);
            block.singular_values.assign(1, 0.0);
            bs.blocks[idx] = std::move(block);
            return;
        }
        const std::size_t r = assign_rank(full.singular_values, policy, pl.p, pl.q);
        block.rank = r;
        block.u = RealMatrix(pl.p, r);
        block.v = RealMatrix(pl.q, r);
        block.singular_values.assign(full.singular_values.begin(),
                                     full.singular_values.begin() + static_cast<long>(r));
        for (std::size_t i = 0; i < pl.p; ++i) {
            for (std::size_t k = 0; k < r; ++k) {
                block.u(i, k) = full.u(i, k) * full.singular_values[k];
            }
        }
        for (std::size_t j = 0; j < pl.q; ++j) {
            for (std::size_t k = 0; k < r; ++k) {
                block.v(j, k) = full.v(j, k);
            }
        }
        bs.blocks[idx] = std::move(block);
    });
    return bs;
}

/// Assemble U_i V_i^T tiles back into a full matrix. Tiles are disjoint, so
/// assembly order does not matter.
inline RealMatrix reconstruct_from_blocks(const BlockSet& bs) {
    if (bs.blocks.size() != bs.layout.placements.size()) {
        throw_error(ErrorCode::shape_mismatch, "reconstruct_from_blocks: block/placement count differ");
    }
    RealMatrix out(bs.layout.rows, bs.layout.cols);
    for (const RankBlock& block : bs.blocks) {
        const RealMatrix tile = matmul_nt(block.u, block.v);
        place_submatrix(out, tile, block.placement.row0, block.placement.col0);
    }
    return out;
}

struct BlockErrorRow {
    Placement placement;
    double frobenius_error = 0.0;
    double relative_error = 0.0;
    std::size_t rank = 0;
    std::size_t param_count = 0;  // (p + q) * rank
};

struct BlockErrorReport {
    std::vector<BlockErrorRow> rows;
    double total_frobenius_error = 0.0;
    double total_relative_error = 0.0;
    std::size_t total_param_count = 0;
};

inline BlockErrorReport block_error_report(const RealMatrix& w, const BlockSet& bs) {
    if (w.rows != bs.layout.rows || w.cols != bs.layout.cols) {
        throw_error(ErrorCode::shape_mismatch, "block_error_report: dims differ");
    }
    BlockErrorReport report;
    double total_sq = 0.0;
    for (const RankBlock& block : bs.blocks) {
        const Placement& pl = block.placement;
        const RealMatrix tile = submatrix(w, pl.row0, pl.col0, pl.p, pl.q);
        const RealMatrix approx = matmul_nt(block.u, block.v);
        const RealMatrix diff = subtract(tile, approx);
        BlockErrorRow row;
        row.placement = pl;
        row.frobenius_error = frobenius_norm(diff);
        const double tile_norm = frobenius_norm(tile);
        row.relative_error = tile_norm > 0.0 ? row.frobenius_error / tile_norm : 0.0;
        row.rank = block.rank;
        row.param_count = (pl.p + pl.q) * block.rank;
        total_sq += row.frobenius_error * row.frobenius_error;
        report.total_param_count += row.param_count;
        report.rows.push_back(row);
    }
    report.total_frobenius_error = std::sqrt(total_sq);
    const double w_norm = frobenius_norm(w);
    report.total_relative_error =
        w_norm > 0.0 ? report.total_frobenius_error / w_norm : 0.0;
    return report;
}

}  // namespace qtlc
