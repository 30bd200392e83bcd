// compressed_model.hpp — a toy model split into compressed layers plus the
// dense remainder. This is the in-memory image of a QTLC checkpoint.

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qtlc/errors.hpp"
#include "qtlc/matrix.hpp"
#include "qtlc/spectral.hpp"
#include "qtlc/tiling.hpp"
#include "qtlc/toy_model.hpp"

namespace qtlc {

struct CompressedModel {
    ToyConfig config;
    std::map<std::string, RealMatrix> dense;          // params kept dense
    std::map<std::string, CompressedLayer> layers;    // compressed params
};

inline TileCatalog default_tile_catalog() {
    TileCatalog catalog;
    catalog.shapes.push_back({8, 8, 4});
    catalog.shapes.push_back({5, 5, 3});
    return catalog;
}

inline TilingLayout make_layout(LayoutKind kind, std::size_t rows, std::size_t cols,
                                const TileCatalog& catalog, std::size_t seed_offset = 0) {
    if (kind == LayoutKind::quasiperiodic) {
        return generate_quasiperiodic_layout(rows, cols, catalog, seed_offset);
    }
    validate_catalog(catalog);
    return generate_uniform_layout(rows, cols, catalog.shapes[0].p, catalog.shapes[0].q);
}

/// Compress every eligible matrix of the model under one layout kind and one
/// policy pair; everything else is carried dense.
inline CompressedModel compress_model(const ToyModel& model, LayoutKind kind,
                                      const TileCatalog& catalog, const RankPolicy& rp,
                                      const TruncationPolicy& tp,
                                      std::size_t seed_offset = 0) {
    CompressedModel cm;
    cm.config = model.config;
    const std::vector<std::string> eligible = compressible_matrix_names(model.config);
    for (const auto& [name, m] : model.params) {
        bool is_eligible = false;
        for (const std::string& e : eligible) {
            if (e == name) {
                is_eligible = true;
                break;
            }
        }
        if (!is_eligible) {
            cm.dense.emplace(name, m);
            continue;
        }
        const TilingLayout layout = make_layout(kind, m.rows, m.cols, catalog, seed_offset);
        CompressedLayer cl = compress_matrix(m, layout, rp, tp);
        cl.name = name;
        cm.layers.emplace(name, std::move(cl));
    }
    return cm;
}

/// Materialize a runnable model: decompress every layer and merge with the
/// dense remainder.
inline ToyModel build_model(const CompressedModel& cm) {
    ToyModel model;
    model.config = cm.config;
    model.params = cm.dense;
    for (const auto& [name, cl] : cm.layers) {
        model.params.emplace(name, decompress_matrix(cl));
    }
    return model;
}

/// Total retained coefficients across all compressed layers.
inline std::size_t stored_coefficient_count(const CompressedModel& cm) {
    std::size_t n = 0;
    for (const auto& [name, cl] : cm.layers) {
        for (const SpectralBlock& sb : cl.spectral_blocks) n += sb.coeffs.size();
    }
    return n;
}

}  // namespace qtlc
