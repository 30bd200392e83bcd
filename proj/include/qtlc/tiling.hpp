// tiling.hpp — aperiodic and uniform tilings of a matrix index space.
//
// The quasiperiodic layout is the 2-D product of two 1-D Fibonacci-word cut
// sequences: symbol 'a' contributes the first catalog shape's extent on each
// axis, 'b' the second's. True rhombic Penrose tiles cannot exactly cover an
// integer grid, but the Fibonacci construction keeps the properties that
// matter here: a small fixed dictionary of tile shapes, local consistency at
// shared boundaries, and no repeating global pattern.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qtlc/errors.hpp"

namespace qtlc {

struct TileShape {
    std::size_t p = 1;            // row extent
    std::size_t q = 1;            // column extent
    std::size_t default_rank = 1; // rank hint carried with the shape
};

struct TileCatalog {
    std::vector<TileShape> shapes;
};

inline void validate_catalog(const TileCatalog& catalog) {
    if (catalog.shapes.size() < 2 || catalog.shapes.size() > 4) {
        throw_error(ErrorCode::config_error, "tile catalog must hold 2 to 4 shapes");
    }
    for (std::size_t i = 0; i < catalog.shapes.size(); ++i) {
        const TileShape& s = catalog.shapes[i];
        if (s.p < 1 || s.q < 1) {
            throw_error(ErrorCode::config_error, "tile extents must be >= 1");
        }
        if (s.default_rank < 1 || s.default_rank > std::min(s.p, s.q)) {
            throw_error(ErrorCode::config_error, "tile default_rank out of range");
        }
        for (std::size_t j = i + 1; j < catalog.shapes.size(); ++j) {
            if (catalog.shapes[j].p == s.p && catalog.shapes[j].q == s.q) {
                throw_error(ErrorCode::config_error, "tile catalog extents must be distinct");
            }
        }
    }
}

/// shape_id for tiles that were truncated at the matrix boundary (or that
/// match no catalog entry).
inline constexpr std::int32_t kBoundaryShapeId = -1;

struct Placement {
    std::size_t row0 = 0;
    std::size_t col0 = 0;
    std::size_t p = 0;
    std::size_t q = 0;
    std::int32_t shape_id = kBoundaryShapeId;

    bool operator==(const Placement& o) const {
        return row0 == o.row0 && col0 == o.col0 && p == o.p && q == o.q && shape_id == o.shape_id;
    }
};

enum class LayoutKind : std::uint8_t { uniform = 0, quasiperiodic = 1 };

struct TilingLayout {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Placement> placements;
    LayoutKind kind = LayoutKind::uniform;
};

/// First n symbols of the infinite Fibonacci word (substitution a -> ab,
/// b -> a, starting from "a"), as a string over {'a', 'b'}.
inline std::string fibonacci_word(std::size_t n) {
    if (n == 0) {
        throw_error(ErrorCode::invalid_length, "fibonacci_word requires n >= 1");
    }
    std::string w = "a";
    while (w.size() < n) {
        std::string next;
        next.reserve(w.size() * 2);
        for (char c : w) {
            if (c == 'a') {
                next += "ab";
            } else {
                next += 'a';
            }
        }
        w = std::move(next);
    }
    w.resize(n);
    return w;
}

namespace detail {

struct AxisInterval {
    std::size_t start = 0;
    std::size_t extent = 0;
    int symbol = 0;       // 0 = 'a', 1 = 'b'
    bool truncated = false;
};

// Cut an axis of length `total` into intervals following the Fibonacci word
// starting at `offset`; the final interval is truncated to fit.
inline std::vector<AxisInterval> fibonacci_axis_cuts(std::size_t total, std::size_t ext_a,
                                                     std::size_t ext_b, std::size_t offset) {
    // Upper bound on symbols consumed: every symbol covers >= 1 index.
    const std::string word = fibonacci_word(offset + total);
    std::vector<AxisInterval> out;
    std::size_t pos = 0;
    std::size_t idx = offset;
    while (pos < total) {
        const int sym = word[idx] == 'a' ? 0 : 1;
        const std::size_t want = sym == 0 ? ext_a : ext_b;
        AxisInterval iv;
        iv.start = pos;
        iv.symbol = sym;
        if (pos + want <= total) {
            iv.extent = want;
        } else {
            iv.extent = total - pos;
            iv.truncated = true;
        }
        out.push_back(iv);
        pos += iv.extent;
        ++idx;
    }
    return out;
}

inline std::int32_t catalog_shape_id(const TileCatalog& catalog, std::size_t p, std::size_t q) {
    for (std::size_t i = 0; i < catalog.shapes.size(); ++i) {
        if (catalog.shapes[i].p == p && catalog.shapes[i].q == q) {
            return static_cast<std::int32_t>(i);
        }
    }
    return kBoundaryShapeId;
}

}  // namespace detail

/// Quasiperiodic layout: both axes are cut by the Fibonacci word starting at
/// seed_offset; tiles are the cross products of the row and column
/// intervals. Tiles truncated at a boundary carry kBoundaryShapeId.
inline TilingLayout generate_quasiperiodic_layout(std::size_t rows, std::size_t cols,
                                                  const TileCatalog& catalog,
                                                  std::size_t seed_offset = 0) {
    if (rows < 1 || cols < 1) {
        throw_error(ErrorCode::invalid_input, "layout dimensions must be >= 1");
    }
    validate_catalog(catalog);
    const TileShape& sa = catalog.shapes[0];
    const TileShape& sb = catalog.shapes[1];

    const auto row_cuts = detail::fibonacci_axis_cuts(rows, sa.p, sb.p, seed_offset);
    const auto col_cuts = detail::fibonacci_axis_cuts(cols, sa.q, sb.q, seed_offset);

    TilingLayout layout;
    layout.rows = rows;
    layout.cols = cols;
    layout.kind = LayoutKind::quasiperiodic;
    layout.placements.reserve(row_cuts.size() * col_cuts.size());
    for (const auto& rc : row_cuts) {
        for (const auto& cc : col_cuts) {
            Placement pl;
            pl.row0 = rc.start;
            pl.col0 = cc.start;
            pl.p = rc.extent;
            pl.q = cc.extent;
            pl.shape_id = (rc.truncated || cc.truncated)
                              ? kBoundaryShapeId
                              : detail::catalog_shape_id(catalog, rc.extent, cc.extent);
            layout.placements.push_back(pl);
        }
    }
    return layout;
}

/// Regular grid of p x q tiles; boundary tiles truncated. Full tiles carry
/// shape_id 0, truncated ones the boundary marker.
inline TilingLayout generate_uniform_layout(std::size_t rows, std::size_t cols, std::size_t p,
                                            std::size_t q) {
    if (rows < 1 || cols < 1) {
        throw_error(ErrorCode::invalid_input, "layout dimensions must be >= 1");
    }
    if (p < 1 || q < 1) {
        throw_error(ErrorCode::invalid_input, "uniform tile extents must be >= 1");
    }
    TilingLayout layout;
    layout.rows = rows;
    layout.cols = cols;
    layout.kind = LayoutKind::uniform;
    for (std::size_t r0 = 0; r0 < rows; r0 += p) {
        const std::size_t pe = std::min(p, rows - r0);
        for (std::size_t c0 = 0; c0 < cols; c0 += q) {
            const std::size_t qe = std::min(q, cols - c0);
            Placement pl;
            pl.row0 = r0;
            pl.col0 = c0;
            pl.p = pe;
            pl.q = qe;
            pl.shape_id = (pe == p && qe == q) ? 0 : kBoundaryShapeId;
            layout.placements.push_back(pl);
        }
    }
    return layout;
}

struct LayoutViolation {
    enum class Kind { out_of_bounds, overlap, gap };
    Kind kind;
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t placement_index = 0;  // meaningful for out_of_bounds
};

struct LayoutReport {
    bool ok = true;
    std::vector<LayoutViolation> violations;
};

/// Checks that the placements form an exact disjoint cover. Never throws;
/// every offending index is reported.
inline LayoutReport validate_layout(const TilingLayout& layout) {
    LayoutReport report;
    std::vector<std::uint32_t> coverage(layout.rows * layout.cols, 0);
    for (std::size_t pi = 0; pi < layout.placements.size(); ++pi) {
        const Placement& pl = layout.placements[pi];
        if (pl.row0 + pl.p > layout.rows || pl.col0 + pl.q > layout.cols || pl.p == 0 ||
            pl.q == 0) {
            report.violations.push_back(
                {LayoutViolation::Kind::out_of_bounds, pl.row0, pl.col0, pi});
            continue;
        }
        for (std::size_t i = pl.row0; i < pl.row0 + pl.p; ++i) {
            for (std::size_t j = pl.col0; j < pl.col0 + pl.q; ++j) {
                ++coverage[i * layout.cols + j];
            }
        }
    }
    for (std::size_t i = 0; i < layout.rows; ++i) {
        for (std::size_t j = 0; j < layout.cols; ++j) {
            const std::uint32_t c = coverage[i * layout.cols + j];
            if (c == 0) {
                report.violations.push_back({LayoutViolation::Kind::gap, i, j, 0});
            } else if (c > 1) {
                report.violations.push_back({LayoutViolation::Kind::overlap, i, j, 0});
            }
        }
    }
    report.ok = report.violations.empty();
    return report;
}

// --- byte serialization (little-endian), embedded in the checkpoint ---

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_layout(const TilingLayout& layout) {
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(layout.kind));
    detail::put_u32(out, static_cast<std::uint32_t>(layout.rows));
    detail::put_u32(out, static_cast<std::uint32_t>(layout.cols));
    detail::put_u32(out, static_cast<std::uint32_t>(layout.placements.size()));
    for (const Placement& pl : layout.placements) {
        detail::put_u32(out, static_cast<std::uint32_t>(pl.row0));
        detail::put_u32(out, static_cast<std::uint32_t>(pl.col0));
        detail::put_u32(out, static_cast<std::uint32_t>(pl.p));
        detail::put_u32(out, static_cast<std::uint32_t>(pl.q));
        detail::put_u32(out, static_cast<std::uint32_t>(pl.shape_id));
    }
    return out;
}

inline TilingLayout decode_layout(const std::uint8_t* data, std::size_t size,
                                  std::size_t* consumed = nullptr) {
    const std::size_t header = 1 + 3 * 4;
    if (size < header) throw_error(ErrorCode::corrupt_block, "layout bytes truncated");
    TilingLayout layout;
    if (data[0] > 1) throw_error(ErrorCode::corrupt_block, "unknown layout kind");
    layout.kind = static_cast<LayoutKind>(data[0]);
    layout.rows = detail::get_u32(data + 1);
    layout.cols = detail::get_u32(data + 5);
    const std::uint32_t count = detail::get_u32(data + 9);
    std::size_t pos = header;
    layout.placements.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (pos + 20 > size) throw_error(ErrorCode::corrupt_block, "layout bytes truncated");
        Placement pl;
        pl.row0 = detail::get_u32(data + pos);
        pl.col0 = detail::get_u32(data + pos + 4);
        pl.p = detail::get_u32(data + pos + 8);
        pl.q = detail::get_u32(data + pos + 12);
        pl.shape_id = static_cast<std::int32_t>(detail::get_u32(data + pos + 16));
        layout.placements.push_back(pl);
        pos += 20;
    }
    if (consumed) *consumed = pos;
    return layout;
}

inline TilingLayout decode_layout(const std::vector<std::uint8_t>& bytes) {
    return decode_layout(bytes.data(), bytes.size());
}

}  // namespace qtlc
