// toy_model.hpp — deterministic byte-level toy transformer.
//
// Pre-norm blocks, gamma-only layer norm, fixed sinusoidal positions, GELU
// (tanh form) feed-forward, causal multi-head attention. Forward keeps a
// full activation cache so backward can produce exact reverse-mode
// gradients for every named matrix. Everything is a value type; forward and
// backward are pure and bit-reproducible.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qtlc/errors.hpp"
#include "qtlc/matrix.hpp"
#include "qtlc/prob.hpp"
#include "qtlc/rng.hpp"

namespace qtlc {

struct ToyConfig {
    std::size_t n_layers = 2;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t d_ff = 64;
    std::size_t vocab = 256;
    std::size_t max_seq = 64;
    std::uint64_t seed = 0;
};

inline void validate_toy_config(const ToyConfig& cfg) {
    if (cfg.n_layers < 1 || cfg.d_model < 1 || cfg.n_heads < 1 || cfg.d_ff < 1 ||
        cfg.vocab < 1 || cfg.max_seq < 1) {
        throw_error(ErrorCode::config_error, "toy config counts must be >= 1");
    }
    if (cfg.d_model % cfg.n_heads != 0) {
        throw_error(ErrorCode::config_error, "d_model must be divisible by n_heads");
    }
}

struct ToyModel {
    ToyConfig config;
    std::map<std::string, RealMatrix> params;
};

using GradientSet = std::map<std::string, RealMatrix>;

struct ForwardTrace {
    std::vector<RealMatrix> hidden;  // block outputs, seq x d_model, one per layer
    RealMatrix logits;               // seq x vocab
};

inline constexpr double kLayerNormEps = 1e-5;

/// Matrices eligible for compression: the per-layer projection and FFN
/// families. Embeddings and norms stay dense.
inline std::vector<std::string> compressible_matrix_names(const ToyConfig& cfg) {
    static const char* kFamilies[] = {"attn.Wq", "attn.Wk", "attn.Wv",
                                      "attn.Wo", "ffn.Win", "ffn.Wout"};
    std::vector<std::string> names;
    names.reserve(cfg.n_layers * 6);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        for (const char* fam : kFamilies) {
            names.push_back("layer" + std::to_string(l) + "." + fam);
        }
    }
    return names;
}

/// Parameters drawn in a fixed construction order from one seeded stream so
/// identical seeds give byte-identical models. Norm gammas start at 1 and
/// consume no randomness.
inline ToyModel init_toy_model(const ToyConfig& cfg) {
    validate_toy_config(cfg);
    ToyModel model;
    model.config = cfg;
    SeededRng rng(cfg.seed);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));

    auto ones_row = [&](std::size_t n) {
        RealMatrix g(1, n);
        for (std::size_t i = 0; i < n; ++i) g(0, i) = 1.0;
        return g;
    };

    model.params.emplace("embed", random_matrix(cfg.vocab, cfg.d_model, rng, stddev));
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        model.params.emplace(prefix + "attn.Wq",
                             random_matrix(cfg.d_model, cfg.d_model, rng, stddev));
        model.params.emplace(prefix + "attn.Wk",
                             random_matrix(cfg.d_model, cfg.d_model, rng, stddev));
        model.params.emplace(prefix + "attn.Wv",
                             random_matrix(cfg.d_model, cfg.d_model, rng, stddev));
        model.params.emplace(prefix + "attn.Wo",
                             random_matrix(cfg.d_model, cfg.d_model, rng, stddev));
        model.params.emplace(prefix + "ffn.Win",
                             random_matrix(cfg.d_model, cfg.d_ff, rng, stddev));
        model.params.emplace(prefix + "ffn.Wout",
                             random_matrix(cfg.d_ff, cfg.d_model, rng, stddev));
        model.params.emplace(prefix + "ln1.gamma", ones_row(cfg.d_model));
        model.params.emplace(prefix + "ln2.gamma", ones_row(cfg.d_model));
    }
    model.params.emplace("final_norm.gamma", ones_row(cfg.d_model));
    model.params.emplace("unembed", random_matrix(cfg.d_model, cfg.vocab, rng, stddev));
    return model;
}

inline std::size_t model_param_count(const ToyModel& model) {
    std::size_t n = 0;
    for (const auto& [name, m] : model.params) n += m.values.size();
    return n;
}

/// New model value with one named matrix swapped; the original is untouched.
inline ToyModel replace_params(const ToyModel& model, const std::string& name,
                               const RealMatrix& m) {
    auto it = model.params.find(name);
    if (it == model.params.end()) {
        throw_error(ErrorCode::unknown_name, "no parameter named '" + name + "'");
    }
    if (it->second.rows != m.rows || it->second.cols != m.cols) {
        throw_error(ErrorCode::shape_mismatch, "replacement shape differs for '" + name + "'");
    }
    require_finite(m, name);
    ToyModel out = model;
    out.params[name] = m;
    return out;
}

inline RealMatrix sinusoidal_positions(std::size_t seq, std::size_t d_model) {
    RealMatrix pe(seq, d_model);
    for (std::size_t t = 0; t < seq; ++t) {
        for (std::size_t i = 0; i * 2 < d_model; ++i) {
            const double freq =
                std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d_model));
            const double angle = static_cast<double>(t) * freq;
            pe(t, 2 * i) = std::sin(angle);
            if (2 * i + 1 < d_model) pe(t, 2 * i + 1) = std::cos(angle);
        }
    }
    return pe;
}

inline double gelu(double x) {
    const double k = std::sqrt(2.0 / M_PI);
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

inline double gelu_derivative(double x) {
    const double k = std::sqrt(2.0 / M_PI);
    const double u = k * (x + 0.044715 * x * x * x);
    const double t = std::tanh(u);
    const double sech2 = 1.0 - t * t;
    return 0.5 * (1.0 + t) + 0.5 * x * sech2 * k * (1.0 + 3.0 * 0.044715 * x * x);
}

namespace detail {

struct NormCache {
    RealMatrix xhat;                 // seq x d
    std::vector<double> inv_sigma;   // per position
};

// y = gamma (.) (x - mean) / sqrt(var + eps), biased variance.
inline RealMatrix layer_norm_forward(const RealMatrix& x, const RealMatrix& gamma,
                                     NormCache& cache) {
    const std::size_t d = x.cols;
    RealMatrix y(x.rows, d);
    cache.xhat = RealMatrix(x.rows, d);
    cache.inv_sigma.assign(x.rows, 0.0);
    for (std::size_t t = 0; t < x.rows; ++t) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x(t, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x(t, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.inv_sigma[t] = inv_sigma;
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (x(t, j) - mean) * inv_sigma;
            cache.xhat(t, j) = xh;
            y(t, j) = gamma(0, j) * xh;
        }
    }
    return y;
}

inline RealMatrix layer_norm_backward(const RealMatrix& dy, const RealMatrix& gamma,
                                      const NormCache& cache, RealMatrix& dgamma) {
    const std::size_t d = dy.cols;
    RealMatrix dx(dy.rows, d);
    for (std::size_t t = 0; t < dy.rows; ++t) {
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dxh = dy(t, j) * gamma(0, j);
            dgamma(0, j) += dy(t, j) * cache.xhat(t, j);
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * cache.xhat(t, j);
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double dxh = dy(t, j) * gamma(0, j);
            dx(t, j) = cache.inv_sigma[t] *
                       (dxh - mean_dxhat - cache.xhat(t, j) * mean_dxhat_xhat);
        }
    }
    return dx;
}

struct AttnCache {
    RealMatrix q, k, v;              // seq x d_model
    std::vector<RealMatrix> probs;   // per head, seq x seq, causal rows
    RealMatrix ctx;                  // seq x d_model
};

struct BlockCache {
    RealMatrix x_in;       // block input
    NormCache ln1;
    RealMatrix ln1_out;
    AttnCache attn;
    RealMatrix h;          // x_in + attention output
    NormCache ln2;
    RealMatrix ln2_out;
    RealMatrix ffn_pre;    // ln2_out * Win
    RealMatrix ffn_act;    // gelu(ffn_pre)
    RealMatrix out;        // h + ffn output
};

struct ForwardCache {
    std::vector<std::int32_t> tokens;
    RealMatrix x0;
    std::vector<BlockCache> blocks;
    NormCache final_norm;
    RealMatrix normed;
    RealMatrix logits;
};

inline void validate_tokens(const ToyConfig& cfg, const std::vector<std::int32_t>& tokens) {
    if (tokens.empty()) {
        throw_error(ErrorCode::invalid_length, "token sequence is empty");
    }
    if (tokens.size() > cfg.max_seq) {
        throw_error(ErrorCode::length_error, "token sequence exceeds max_seq");
    }
    for (std::int32_t t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab) {
            throw_error(ErrorCode::vocab_error, "token id out of vocab range");
        }
    }
}

inline ForwardCache forward_cached(const ToyModel& model,
                                   const std::vector<std::int32_t>& tokens) {
    const ToyConfig& cfg = model.config;
    validate_tokens(cfg, tokens);
    const std::size_t seq = tokens.size();
    const std::size_t d = cfg.d_model;
    const std::size_t dh = d / cfg.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    ForwardCache fc;
    fc.tokens = tokens;

    const RealMatrix& embed = model.params.at("embed");
    const RealMatrix pe = sinusoidal_positions(seq, d);
    fc.x0 = RealMatrix(seq, d);
    for (std::size_t t = 0; t < seq; ++t) {
        const double* row = embed.row_ptr(static_cast<std::size_t>(tokens[t]));
        for (std::size_t j = 0; j < d; ++j) fc.x0(t, j) = row[j] + pe(t, j);
    }

    RealMatrix x = fc.x0;
    fc.blocks.resize(cfg.n_layers);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        BlockCache& bc = fc.blocks[l];
        bc.x_in = x;

        bc.ln1_out = layer_norm_forward(x, model.params.at(prefix + "ln1.gamma"), bc.ln1);

        AttnCache& ac = bc.attn;
        ac.q = matmul(bc.ln1_out, model.params.at(prefix + "attn.Wq"));
        ac.k = matmul(bc.ln1_out, model.params.at(prefix + "attn.Wk"));
        ac.v = matmul(bc.ln1_out, model.params.at(prefix + "attn.Wv"));
        ac.ctx = RealMatrix(seq, d);
        ac.probs.assign(cfg.n_heads, RealMatrix(seq, seq));
        for (std::size_t head = 0; head < cfg.n_heads; ++head) {
            const std::size_t off = head * dh;
            RealMatrix& probs = ac.probs[head];
            std::vector<double> scores;
            for (std::size_t t = 0; t < seq; ++t) {
                scores.assign(t + 1, 0.0);
                for (std::size_t s = 0; s <= t; ++s) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < dh; ++j) {
                        dot += ac.q(t, off + j) * ac.k(s, off + j);
                    }
                    scores[s] = dot * scale;
                }
                const Distribution dist = softmax(scores.data(), scores.size());
                for (std::size_t s = 0; s <= t; ++s) {
                    probs(t, s) = dist.probs[s];
                    for (std::size_t j = 0; j < dh; ++j) {
                        ac.ctx(t, off + j) += dist.probs[s] * ac.v(s, off + j);
                    }
                }
            }
        }
        const RealMatrix attn_out = matmul(ac.ctx, model.params.at(prefix + "attn.Wo"));

        bc.h = bc.x_in;
        add_in_place(bc.h, attn_out);

        bc.ln2_out = layer_norm_forward(bc.h, model.params.at(prefix + "ln2.gamma"), bc.ln2);
        bc.ffn_pre = matmul(bc.ln2_out, model.params.at(prefix + "ffn.Win"));
        bc.ffn_act = RealMatrix(seq, cfg.d_ff);
        for (std::size_t i = 0; i < bc.ffn_pre.values.size(); ++i) {
            bc.ffn_act.values[i] = gelu(bc.ffn_pre.values[i]);
        }
        const RealMatrix ffn_out = matmul(bc.ffn_act, model.params.at(prefix + "ffn.Wout"));

        bc.out = bc.h;
        add_in_place(bc.out, ffn_out);
        x = bc.out;
    }

    fc.normed = layer_norm_forward(x, model.params.at("final_norm.gamma"), fc.final_norm);
    fc.logits = matmul(fc.normed, model.params.at("unembed"));
    return fc;
}

}  // namespace detail

inline ForwardTrace forward(const ToyModel& model, const std::vector<std::int32_t>& tokens) {
    detail::ForwardCache fc = detail::forward_cached(model, tokens);
    ForwardTrace trace;
    trace.hidden.reserve(fc.blocks.size());
    for (auto& bc : fc.blocks) trace.hidden.push_back(bc.out);
    trace.logits = std::move(fc.logits);
    return trace;
}

/// What backward differentiates. Cross-entropy is averaged over the masked
/// positions (empty mask = every position). Alignment sums KL terms over
/// positions and masked layers against a reference trace, scaled by
/// kl_weight, with logits-free hidden states softmaxed at temperature T.
struct LossSpec {
    enum class Kind { cross_entropy, alignment };
    Kind kind = Kind::cross_entropy;

    std::vector<std::int32_t> targets;
    std::vector<std::uint8_t> mask;

    const ForwardTrace* reference = nullptr;
    double temperature = 1.0;
    double kl_weight = 1.0;
    std::vector<std::size_t> layer_mask;  // empty = all layers

    static LossSpec cross_entropy(std::vector<std::int32_t> targets,
                                  std::vector<std::uint8_t> mask = {}) {
        LossSpec s;
        s.kind = Kind::cross_entropy;
        s.targets = std::move(targets);
        s.mask = std::move(mask);
        return s;
    }
    static LossSpec alignment(const ForwardTrace& reference, double temperature = 1.0,
                              double kl_weight = 1.0, std::vector<std::size_t> layer_mask = {}) {
        LossSpec s;
        s.kind = Kind::alignment;
        s.reference = &reference;
        s.temperature = temperature;
        s.kl_weight = kl_weight;
        s.layer_mask = std::move(layer_mask);
        return s;
    }
};

/// Cross entropy of one logit row against a target class, optionally with
/// the gradient (softmax minus one-hot) written to grad_out.
inline double cross_entropy_row(const double* logits, std::size_t n, std::size_t target,
                                double* grad_out = nullptr) {
    if (target >= n) {
        throw_error(ErrorCode::vocab_error, "target class out of range");
    }
    double max_logit = logits[0];
    for (std::size_t j = 1; j < n; ++j) max_logit = std::max(max_logit, logits[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(logits[j] - max_logit);
    const double lse = max_logit + std::log(sum);
    if (grad_out != nullptr) {
        for (std::size_t j = 0; j < n; ++j) {
            grad_out[j] = std::exp(logits[j] - max_logit) / sum;
        }
        grad_out[target] -= 1.0;
    }
    return lse - logits[target];
}

namespace detail {

// d/dz of KL(p || softmax(z)) with the same q-floor the forward uses: floored
// entries contribute no log-derivative.
inline void kl_grad_wrt_comp_row(const std::vector<double>& p, const std::vector<double>& q,
                                 double scale, double* out, std::size_t n) {
    double covered = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (q[i] > kKlFloor) covered += p[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double direct = q[j] > kKlFloor ? p[j] : 0.0;
        out[j] += scale * (q[j] * covered - direct);
    }
}

struct LossGrads {
    double loss = 0.0;
    RealMatrix dlogits;                   // empty when unused
    std::vector<RealMatrix> dhidden;      // per layer, empty matrices when unused
};

inline LossGrads loss_and_output_grads(const ToyModel& model, const ForwardCache& fc,
                                       const LossSpec& spec) {
    const ToyConfig& cfg = model.config;
    const std::size_t seq = fc.tokens.size();
    LossGrads lg;
    lg.dhidden.assign(cfg.n_layers, RealMatrix());

    if (spec.kind == LossSpec::Kind::cross_entropy) {
        if (spec.targets.size() != seq) {
            throw_error(ErrorCode::shape_mismatch, "target length does not match tokens");
        }
        if (!spec.mask.empty() && spec.mask.size() != seq) {
            throw_error(ErrorCode::shape_mismatch, "mask length does not match tokens");
        }
        lg.dlogits = RealMatrix(seq, cfg.vocab);
        std::size_t active = 0;
        for (std::size_t t = 0; t < seq; ++t) {
            if (!spec.mask.empty() && spec.mask[t] == 0) continue;
            ++active;
        }
        if (active == 0) return lg;
        const double inv_active = 1.0 / static_cast<double>(active);
        for (std::size_t t = 0; t < seq; ++t) {
            if (!spec.mask.empty() && spec.mask[t] == 0) continue;
            const std::int32_t target = spec.targets[t];
            if (target < 0 || static_cast<std::size_t>(target) >= cfg.vocab) {
                throw_error(ErrorCode::vocab_error, "target token out of vocab range");
            }
            lg.loss += cross_entropy_row(fc.logits.row_ptr(t), cfg.vocab,
                                         static_cast<std::size_t>(target),
                                         lg.dlogits.row_ptr(t)) *
                       inv_active;
            for (std::size_t j = 0; j < cfg.vocab; ++j) lg.dlogits(t, j) *= inv_active;
        }
        return lg;
    }

    // alignment
    if (spec.reference == nullptr) {
        throw_error(ErrorCode::invalid_input, "alignment loss requires a reference trace");
    }
    const ForwardTrace& ref = *spec.reference;
    if (ref.hidden.size() != cfg.n_layers) {
        throw_error(ErrorCode::shape_mismatch, "reference trace layer count differs");
    }
    std::vector<std::size_t> layers = spec.layer_mask;
    if (layers.empty()) {
        for (std::size_t l = 0; l < cfg.n_layers; ++l) layers.push_back(l);
    }
    const double inv_t = 1.0 / spec.temperature;
    std::vector<double> scaled_ref(cfg.d_model), scaled_comp(cfg.d_model);
    for (std::size_t l : layers) {
        if (l >= cfg.n_layers) {
            throw_error(ErrorCode::invalid_input, "layer mask index out of range");
        }
        const RealMatrix& h_ref = ref.hidden[l];
        const RealMatrix& h_comp = fc.blocks[l].out;
        if (h_ref.rows != seq || h_ref.cols != cfg.d_model) {
            throw_error(ErrorCode::shape_mismatch, "reference trace shape differs");
        }
        RealMatrix& dh = lg.dhidden[l];
        if (dh.values.empty()) dh = RealMatrix(seq, cfg.d_model);
        for (std::size_t t = 0; t < seq; ++t) {
            for (std::size_t j = 0; j < cfg.d_model; ++j) {
                scaled_ref[j] = h_ref(t, j) * inv_t;
                scaled_comp[j] = h_comp(t, j) * inv_t;
            }
            const Distribution p = softmax(scaled_ref.data(), cfg.d_model);
            const Distribution q = softmax(scaled_comp.data(), cfg.d_model);
            lg.loss += spec.kl_weight * kl_divergence(p, q);
            kl_grad_wrt_comp_row(p.probs, q.probs, spec.kl_weight * inv_t, dh.row_ptr(t),
                                 cfg.d_model);
        }
    }
    return lg;
}

}  // namespace detail

/// Exact reverse-mode gradients of the scalar loss with respect to every
/// named matrix.
inline std::pair<double, GradientSet> backward(const ToyModel& model,
                                               const std::vector<std::int32_t>& tokens,
                                               const LossSpec& spec) {
    const ToyConfig& cfg = model.config;
    const detail::ForwardCache fc = detail::forward_cached(model, tokens);
    const detail::LossGrads lg = detail::loss_and_output_grads(model, fc, spec);

    GradientSet grads;
    for (const auto& [name, m] : model.params) {
        grads.emplace(name, RealMatrix(m.rows, m.cols));
    }

    const std::size_t seq = tokens.size();
    const std::size_t d = cfg.d_model;
    const std::size_t dh = d / cfg.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // Gradient flowing into the last block's output.
    RealMatrix dx(seq, d);
    if (!lg.dlogits.values.empty()) {
        grads.at("unembed") = matmul_tn(fc.normed, lg.dlogits);
        const RealMatrix dnormed = matmul_nt(lg.dlogits, model.params.at("unembed"));
        dx = detail::layer_norm_backward(dnormed, model.params.at("final_norm.gamma"),
                                         fc.final_norm, grads.at("final_norm.gamma"));
    }
    if (!lg.dhidden[cfg.n_layers - 1].values.empty()) {
        add_in_place(dx, lg.dhidden[cfg.n_layers - 1]);
    }

    for (std::size_t l = cfg.n_layers; l-- > 0;) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        const detail::BlockCache& bc = fc.blocks[l];

        // out = h + gelu(ln2(h) Win) Wout
        RealMatrix dh_total = dx;  // residual branch
        {
            grads.at(prefix + "ffn.Wout") = matmul_tn(bc.ffn_act, dx);
            RealMatrix dact = matmul_nt(dx, model.params.at(prefix + "ffn.Wout"));
            for (std::size_t i = 0; i < dact.values.size(); ++i) {
                dact.values[i] *= gelu_derivative(bc.ffn_pre.values[i]);
            }
            grads.at(prefix + "ffn.Win") = matmul_tn(bc.ln2_out, dact);
            const RealMatrix dln2_out = matmul_nt(dact, model.params.at(prefix + "ffn.Win"));
            const RealMatrix dh_norm =
                detail::layer_norm_backward(dln2_out, model.params.at(prefix + "ln2.gamma"),
                                            bc.ln2, grads.at(prefix + "ln2.gamma"));
            add_in_place(dh_total, dh_norm);
        }

        // h = x_in + attn(ln1(x_in)) Wo
        RealMatrix dx_in = dh_total;  // residual branch
        {
            const detail::AttnCache& ac = bc.attn;
            grads.at(prefix + "attn.Wo") = matmul_tn(ac.ctx, dh_total);
            const RealMatrix dctx = matmul_nt(dh_total, model.params.at(prefix + "attn.Wo"));

            RealMatrix dq(seq, d), dk(seq, d), dv(seq, d);
            for (std::size_t head = 0; head < cfg.n_heads; ++head) {
                const std::size_t off = head * dh;
                const RealMatrix& probs = ac.probs[head];
                std::vector<double> dprobs;
                for (std::size_t t = 0; t < seq; ++t) {
                    dprobs.assign(t + 1, 0.0);
                    for (std::size_t s = 0; s <= t; ++s) {
                        double dot = 0.0;
                        for (std::size_t j = 0; j < dh; ++j) {
                            dot += dctx(t, off + j) * ac.v(s, off + j);
                        }
                        dprobs[s] = dot;
                        for (std::size_t j = 0; j < dh; ++j) {
                            dv(s, off + j) += probs(t, s) * dctx(t, off + j);
                        }
                    }
                    double dot_pd = 0.0;
                    for (std::size_t s = 0; s <= t; ++s) dot_pd += probs(t, s) * dprobs[s];
                    for (std::size_t s = 0; s <= t; ++s) {
                        const double dscore = probs(t, s) * (dprobs[s] - dot_pd) * scale;
                        for (std::size_t j = 0; j < dh; ++j) {
                            dq(t, off + j) += dscore * ac.k(s, off + j);
                            dk(s, off + j) += dscore * ac.q(t, off + j);
                        }
                    }
                }
            }
            grads.at(prefix + "attn.Wq") = matmul_tn(bc.ln1_out, dq);
            grads.at(prefix + "attn.Wk") = matmul_tn(bc.ln1_out, dk);
            grads.at(prefix + "attn.Wv") = matmul_tn(bc.ln1_out, dv);

            RealMatrix dln1_out = matmul_nt(dq, model.params.at(prefix + "attn.Wq"));
            add_in_place(dln1_out, matmul_nt(dk, model.params.at(prefix + "attn.Wk")));
            add_in_place(dln1_out, matmul_nt(dv, model.params.at(prefix + "attn.Wv")));
            const RealMatrix dx_norm =
                detail::layer_norm_backward(dln1_out, model.params.at(prefix + "ln1.gamma"),
                                            bc.ln1, grads.at(prefix + "ln1.gamma"));
            add_in_place(dx_in, dx_norm);
        }

        if (l > 0 && !lg.dhidden[l - 1].values.empty()) {
            add_in_place(dx_in, lg.dhidden[l - 1]);
        }
        dx = std::move(dx_in);
    }

    RealMatrix& dembed = grads.at("embed");
    for (std::size_t t = 0; t < seq; ++t) {
        double* row = dembed.row_ptr(static_cast<std::size_t>(tokens[t]));
        for (std::size_t j = 0; j < d; ++j) row[j] += dx(t, j);
    }

    return {lg.loss, std::move(grads)};
}

}  // namespace qtlc
