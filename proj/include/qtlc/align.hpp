// align.hpp — stage-II KL alignment of a compressed model against its
// original, by gradient descent on the retained spectral coefficients.
//
// The decompression path (scatter coefficients, idct2, tile assembly) is
// linear, so dL/dcoeff is just the forward DCT of the weight gradient tile,
// gathered at the retained indices.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "qtlc/compressed_model.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/matrix.hpp"
#include "qtlc/prob.hpp"
#include "qtlc/rng.hpp"
#include "qtlc/spectral.hpp"
#include "qtlc/toy_model.hpp"

namespace qtlc {

struct AlignConfig {
    double temperature = 1.0;
    double step_size = 1e-2;
    std::size_t steps = 200;
    std::size_t batch_tokens = 10000;
    std::vector<std::size_t> layer_mask;  // empty = all layers
    double kl_weight = 1.0;
    std::uint64_t seed = 0;
    bool use_momentum = false;
    double momentum = 0.9;
};

inline void validate_align_config(const AlignConfig& cfg) {
    if (!(cfg.temperature > 0.0)) {
        throw_error(ErrorCode::config_error, "alignment temperature must be > 0");
    }
    if (!(cfg.step_size > 0.0)) {
        throw_error(ErrorCode::config_error, "alignment step_size must be > 0");
    }
    if (cfg.batch_tokens < 1) {
        throw_error(ErrorCode::config_error, "batch_tokens must be >= 1");
    }
    if (cfg.kl_weight < 0.0) {
        throw_error(ErrorCode::config_error, "kl_weight must be >= 0");
    }
    if (cfg.use_momentum && !(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
        throw_error(ErrorCode::config_error, "momentum must lie in [0, 1)");
    }
}

struct AlignReport {
    std::vector<std::pair<std::size_t, double>> loss_curve;  // (step, L_align)
    std::vector<double> initial_layer_kl;
    std::vector<double> final_layer_kl;
    double wall_time_seconds = 0.0;
    AlignConfig config;
};

/// Sum over batch positions and masked layers of
/// KL(softmax(h_orig/T) || softmax(h_comp/T)), scaled by kl_weight.
inline double alignment_loss(const ForwardTrace& orig, const ForwardTrace& comp,
                             const AlignConfig& cfg) {
    validate_align_config(cfg);
    if (orig.hidden.size() != comp.hidden.size()) {
        throw_error(ErrorCode::shape_mismatch, "trace layer counts differ");
    }
    std::vector<std::size_t> layers = cfg.layer_mask;
    if (layers.empty()) {
        for (std::size_t l = 0; l < orig.hidden.size(); ++l) layers.push_back(l);
    }
    const double inv_t = 1.0 / cfg.temperature;
    double loss = 0.0;
    for (std::size_t l : layers) {
        if (l >= orig.hidden.size()) {
            throw_error(ErrorCode::invalid_input, "layer mask index out of range");
        }
        const RealMatrix& ho = orig.hidden[l];
        const RealMatrix& hc = comp.hidden[l];
        if (!ho.same_shape(hc)) {
            throw_error(ErrorCode::shape_mismatch, "trace shapes differ");
        }
        std::vector<double> so(ho.cols), sc(ho.cols);
        for (std::size_t t = 0; t < ho.rows; ++t) {
            for (std::size_t j = 0; j < ho.cols; ++j) {
                so[j] = ho(t, j) * inv_t;
                sc[j] = hc(t, j) * inv_t;
            }
            const Distribution p = softmax(so.data(), so.size());
            const Distribution q = softmax(sc.data(), sc.size());
            loss += cfg.kl_weight * kl_divergence(p, q);
        }
    }
    return loss;
}

/// Non-overlapping max_seq windows covering the stream; the tail keeps its
/// short remainder.
inline std::vector<std::vector<std::int32_t>> split_windows(
    const std::vector<std::int32_t>& stream, std::size_t max_seq) {
    std::vector<std::vector<std::int32_t>> windows;
    for (std::size_t pos = 0; pos < stream.size(); pos += max_seq) {
        const std::size_t len = std::min(max_seq, stream.size() - pos);
        windows.emplace_back(stream.begin() + static_cast<long>(pos),
                             stream.begin() + static_cast<long>(pos + len));
    }
    return windows;
}

/// Mean KL per layer over all holdout positions (temperature from cfg, no
/// kl_weight scaling).
inline std::vector<double> hidden_divergence_eval(const ToyModel& orig, const ToyModel& comp,
                                                  const std::vector<std::int32_t>& holdout,
                                                  const AlignConfig& cfg) {
    validate_align_config(cfg);
    if (orig.config.n_layers != comp.config.n_layers ||
        orig.config.d_model != comp.config.d_model) {
        throw_error(ErrorCode::shape_mismatch, "model configs differ");
    }
    if (holdout.empty()) {
        throw_error(ErrorCode::data_error, "holdout stream is empty");
    }
    const std::size_t n_layers = orig.config.n_layers;
    std::vector<double> sums(n_layers, 0.0);
    std::size_t positions = 0;
    const double inv_t = 1.0 / cfg.temperature;
    for (const auto& window : split_windows(holdout, orig.config.max_seq)) {
        const ForwardTrace to = forward(orig, window);
        const ForwardTrace tc = forward(comp, window);
        positions += window.size();
        std::vector<double> so(orig.config.d_model), sc(orig.config.d_model);
        for (std::size_t l = 0; l < n_layers; ++l) {
            for (std::size_t t = 0; t < window.size(); ++t) {
                for (std::size_t j = 0; j < orig.config.d_model; ++j) {
                    so[j] = to.hidden[l](t, j) * inv_t;
                    sc[j] = tc.hidden[l](t, j) * inv_t;
                }
                const Distribution p = softmax(so.data(), so.size());
                const Distribution q = softmax(sc.data(), sc.size());
                sums[l] += kl_divergence(p, q);
            }
        }
    }
    for (double& s : sums) s /= static_cast<double>(positions);
    return sums;
}

namespace detail {

// dL/dcoeff for every retained coefficient, flat, in (layer name, block,
// coefficient) order. The DCT of the weight-gradient tile gives the
// gradient in frequency space; retained indices select the trainables.
inline void accumulate_coeff_grads(const CompressedModel& cm, const GradientSet& grads,
                                   std::vector<double>& acc) {
    std::size_t i = 0;
    for (const auto& [name, cl] : cm.layers) {
        const RealMatrix& dw = grads.at(name);
        for (const SpectralBlock& sb : cl.spectral_blocks) {
            if (sb.coeffs.empty()) continue;
            const RealMatrix tile = submatrix(dw, sb.placement.row0, sb.placement.col0,
                                              sb.placement.p, sb.placement.q);
            const RealMatrix c = dct2(tile);
            for (const SpectralCoefficient& sc : sb.coeffs) {
                acc[i++] += c(sc.row, sc.col);
            }
        }
    }
}

inline void apply_coeff_step(CompressedModel& cm, const std::vector<double>& step) {
    std::size_t i = 0;
    for (auto& [name, cl] : cm.layers) {
        for (SpectralBlock& sb : cl.spectral_blocks) {
            for (SpectralCoefficient& sc : sb.coeffs) {
                sc.value -= step[i++];
            }
        }
    }
}

inline void check_compressed_against(const ToyModel& orig, const CompressedModel& cm) {
    for (const auto& [name, cl] : cm.layers) {
        auto it = orig.params.find(name);
        if (it == orig.params.end()) {
            throw_error(ErrorCode::unknown_name, "compressed layer '" + name + "' not in model");
        }
        if (it->second.rows != cl.rows || it->second.cols != cl.cols) {
            throw_error(ErrorCode::shape_mismatch,
                        "compressed layer '" + name + "' shape differs from model");
        }
    }
}

}  // namespace detail

/// Gradient-descent alignment loop. Trainables are the retained coefficient
/// values only; layouts, ranks, and index sets stay frozen. Batches are
/// contiguous max_seq windows drawn round-robin from the corpus, with a
/// seeded starting window.
inline std::pair<CompressedModel, AlignReport> align_compressed(
    const ToyModel& orig, const CompressedModel& compressed,
    const std::vector<std::int32_t>& corpus, const AlignConfig& cfg) {
    validate_align_config(cfg);
    if (corpus.empty()) {
        throw_error(ErrorCode::data_error, "alignment corpus is empty");
    }
    detail::check_compressed_against(orig, compressed);

    const auto t_start = std::chrono::steady_clock::now();
    CompressedModel cm = compressed;
    const std::size_t max_seq = orig.config.max_seq;
    const auto windows = split_windows(corpus, max_seq);
    const std::size_t n_windows = windows.size();
    const std::size_t windows_per_batch =
        std::max<std::size_t>(1, (cfg.batch_tokens + max_seq - 1) / max_seq);

    std::vector<ForwardTrace> orig_traces;
    orig_traces.reserve(n_windows);
    for (const auto& w : windows) orig_traces.push_back(forward(orig, w));

    SeededRng rng(cfg.seed);
    const std::size_t start = rng.next_below(n_windows);

    AlignReport report;
    report.config = cfg;
    report.initial_layer_kl = hidden_divergence_eval(orig, build_model(cm), corpus, cfg);

    const std::size_t n_coeffs = stored_coefficient_count(cm);
    std::vector<double> grad(n_coeffs, 0.0);
    std::vector<double> velocity;
    if (cfg.use_momentum) velocity.assign(n_coeffs, 0.0);
    std::vector<double> step_delta(n_coeffs, 0.0);

    double initial_loss = 0.0;
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const ToyModel comp = build_model(cm);
        std::fill(grad.begin(), grad.end(), 0.0);
        double batch_loss = 0.0;
        for (std::size_t s = 0; s < windows_per_batch; ++s) {
            const std::size_t wi = (start + t * windows_per_batch + s) % n_windows;
            auto [loss, grads] = backward(
                comp, windows[wi],
                LossSpec::alignment(orig_traces[wi], cfg.temperature, cfg.kl_weight,
                                    cfg.layer_mask));
            batch_loss += loss;
            detail::accumulate_coeff_grads(cm, grads, grad);
        }
        if (!std::isfinite(batch_loss)) {
            throw_error(ErrorCode::divergence_error,
                        "alignment loss non-finite at step " + std::to_string(t));
        }
        if (t == 0) {
            initial_loss = batch_loss;
        } else if (batch_loss > 10.0 * initial_loss) {
            throw_error(ErrorCode::divergence_error,
                        "alignment loss exceeded 10x initial at step " + std::to_string(t));
        }
        report.loss_curve.emplace_back(t, batch_loss);

        if (cfg.use_momentum) {
            for (std::size_t i = 0; i < n_coeffs; ++i) {
                velocity[i] = cfg.momentum * velocity[i] + grad[i];
                step_delta[i] = cfg.step_size * velocity[i];
            }
        } else {
            for (std::size_t i = 0; i < n_coeffs; ++i) {
                step_delta[i] = cfg.step_size * grad[i];
            }
        }
        detail::apply_coeff_step(cm, step_delta);
    }

    // Closing curve point on the next round-robin batch, loss only.
    {
        const ToyModel comp = build_model(cm);
        double batch_loss = 0.0;
        for (std::size_t s = 0; s < windows_per_batch; ++s) {
            const std::size_t wi = (start + cfg.steps * windows_per_batch + s) % n_windows;
            const ForwardTrace tc = forward(comp, windows[wi]);
            batch_loss += alignment_loss(orig_traces[wi], tc, cfg);
        }
        report.loss_curve.emplace_back(cfg.steps, batch_loss);
        report.final_layer_kl = hidden_divergence_eval(orig, comp, corpus, cfg);
    }

    const auto t_end = std::chrono::steady_clock::now();
    report.wall_time_seconds = std::chrono::duration<double>(t_end - t_start).count();
    return {std::move(cm), std::move(report)};
}

}  // namespace qtlc
