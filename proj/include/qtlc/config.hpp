// config.hpp — JSON pipeline configuration.
//
// Every object is checked against its allowed key set, so a typo fails
// loudly instead of silently falling back to a default. Command-line flags
// are applied on top of file values by the CLI layer.

#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

#include "qtlc/align.hpp"
#include "qtlc/compressed_model.hpp"
#include "qtlc/curriculum.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/rank_blocks.hpp"
#include "qtlc/spectral.hpp"
#include "qtlc/tiling.hpp"
#include "qtlc/toy_model.hpp"

namespace qtlc {

struct PipelinePaths {
    std::string corpus;
    std::string probe;
    std::string qa;
    std::string holdout_qa;
    std::string checkpoint;
    std::string out;
    std::vector<std::string> documents;
};

struct AblationAxes {
    std::vector<LayoutKind> layouts = {LayoutKind::quasiperiodic, LayoutKind::uniform};
    std::vector<bool> align_flags = {true, false};
    std::vector<double> etas = {0.5, 0.7, 0.9};
    std::vector<std::string> curricula = {"sectionwise", "onepass"};
};

struct PipelineConfig {
    ToyConfig model;
    LayoutKind layout_kind = LayoutKind::quasiperiodic;
    std::size_t seed_offset = 0;
    TileCatalog catalog = default_tile_catalog();
    RankPolicy rank_policy = RankPolicy::energy();
    TruncationPolicy truncation_policy = TruncationPolicy::threshold(0.0);
    AlignConfig align;
    CurriculumConfig curriculum;
    std::string curriculum_mode = "sectionwise";
    PipelinePaths paths;
    AblationAxes ablation;
};

namespace detail {

inline void check_keys(const nlohmann::json& obj,
                       std::initializer_list<const char*> allowed,
                       const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw_error(ErrorCode::config_error,
                        "unknown key '" + key + "' in " + context);
        }
    }
}

template <typename T>
inline void read_field(const nlohmann::json& obj, const char* key, T& out,
                       const std::string& context) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw_error(ErrorCode::config_error,
                    std::string("bad value for '") + key + "' in " + context);
    }
}

inline LayoutKind parse_layout_kind(const std::string& s, const std::string& context) {
    if (s == "quasiperiodic") return LayoutKind::quasiperiodic;
    if (s == "uniform") return LayoutKind::uniform;
    throw_error(ErrorCode::config_error, "unknown layout kind '" + s + "' in " + context);
}

inline void parse_model_section(const nlohmann::json& obj, ToyConfig& cfg) {
    check_keys(obj, {"n_layers", "d_model", "n_heads", "d_ff", "vocab", "max_seq", "seed"},
               "model");
    read_field(obj, "n_layers", cfg.n_layers, "model");
    read_field(obj, "d_model", cfg.d_model, "model");
    read_field(obj, "n_heads", cfg.n_heads, "model");
    read_field(obj, "d_ff", cfg.d_ff, "model");
    read_field(obj, "vocab", cfg.vocab, "model");
    read_field(obj, "max_seq", cfg.max_seq, "model");
    read_field(obj, "seed", cfg.seed, "model");
    validate_toy_config(cfg);
}

inline void parse_layout_section(const nlohmann::json& obj, PipelineConfig& cfg) {
    check_keys(obj, {"kind", "seed_offset", "catalog"}, "layout");
    if (obj.contains("kind")) {
        std::string kind;
        read_field(obj, "kind", kind, "layout");
        cfg.layout_kind = parse_layout_kind(kind, "layout");
    }
    read_field(obj, "seed_offset", cfg.seed_offset, "layout");
    if (obj.contains("catalog")) {
        const nlohmann::json& arr = obj.at("catalog");
        if (!arr.is_array()) {
            throw_error(ErrorCode::config_error, "layout.catalog must be an array");
        }
        cfg.catalog.shapes.clear();
        for (const nlohmann::json& entry : arr) {
            check_keys(entry, {"p", "q", "rank"}, "layout.catalog entry");
            TileShape shape;
            read_field(entry, "p", shape.p, "layout.catalog entry");
            read_field(entry, "q", shape.q, "layout.catalog entry");
            read_field(entry, "rank", shape.default_rank, "layout.catalog entry");
            cfg.catalog.shapes.push_back(shape);
        }
        validate_catalog(cfg.catalog);
    }
}

inline void parse_rank_policy_section(const nlohmann::json& obj, RankPolicy& rp) {
    check_keys(obj, {"mode", "r", "epsilon", "r_max"}, "rank_policy");
    std::string mode = rp.mode == RankPolicy::Mode::fixed ? "fixed" : "energy";
    read_field(obj, "mode", mode, "rank_policy");
    if (mode == "fixed") {
        rp.mode = RankPolicy::Mode::fixed;
    } else if (mode == "energy") {
        rp.mode = RankPolicy::Mode::energy;
    } else {
        throw_error(ErrorCode::config_error, "unknown rank_policy mode '" + mode + "'");
    }
    read_field(obj, "r", rp.fixed_rank, "rank_policy");
    read_field(obj, "epsilon", rp.epsilon, "rank_policy");
    if (obj.contains("r_max")) {
        std::size_t cap = 0;
        read_field(obj, "r_max", cap, "rank_policy");
        rp.r_max = cap;
    }
    validate_rank_policy(rp);
}

inline void parse_truncation_section(const nlohmann::json& obj, TruncationPolicy& tp) {
    check_keys(obj, {"mode", "tau", "eta", "k"}, "truncation_policy");
    std::string mode;
    switch (tp.mode) {
        case TruncationPolicy::Mode::threshold: mode = "threshold"; break;
        case TruncationPolicy::Mode::energy: mode = "energy"; break;
        case TruncationPolicy::Mode::topk: mode = "topk"; break;
    }
    read_field(obj, "mode", mode, "truncation_policy");
    if (mode == "threshold") {
        tp.mode = TruncationPolicy::Mode::threshold;
    } else if (mode == "energy") {
        tp.mode = TruncationPolicy::Mode::energy;
    } else if (mode == "topk") {
        tp.mode = TruncationPolicy::Mode::topk;
    } else {
        throw_error(ErrorCode::config_error, "unknown truncation_policy mode '" + mode + "'");
    }
    read_field(obj, "tau", tp.tau, "truncation_policy");
    read_field(obj, "eta", tp.eta, "truncation_policy");
    read_field(obj, "k", tp.k, "truncation_policy");
    validate_truncation_policy(tp);
}

inline void parse_align_section(const nlohmann::json& obj, AlignConfig& ac) {
    check_keys(obj,
               {"temperature", "step_size", "steps", "batch_tokens", "layer_mask",
                "kl_weight", "seed", "use_momentum", "momentum"},
               "align");
    read_field(obj, "temperature", ac.temperature, "align");
    read_field(obj, "step_size", ac.step_size, "align");
    read_field(obj, "steps", ac.steps, "align");
    read_field(obj, "batch_tokens", ac.batch_tokens, "align");
    read_field(obj, "layer_mask", ac.layer_mask, "align");
    read_field(obj, "kl_weight", ac.kl_weight, "align");
    read_field(obj, "seed", ac.seed, "align");
    read_field(obj, "use_momentum", ac.use_momentum, "align");
    read_field(obj, "momentum", ac.momentum, "align");
    validate_align_config(ac);
}

inline void parse_curriculum_section(const nlohmann::json& obj, PipelineConfig& cfg) {
    check_keys(obj,
               {"questions_per_section_cap", "epochs", "steps_per_chunk", "step_size",
                "trainables", "seed", "mode"},
               "curriculum");
    CurriculumConfig& cc = cfg.curriculum;
    read_field(obj, "questions_per_section_cap", cc.questions_per_section_cap, "curriculum");
    read_field(obj, "epochs", cc.epochs, "curriculum");
    read_field(obj, "steps_per_chunk", cc.steps_per_chunk, "curriculum");
    read_field(obj, "step_size", cc.step_size, "curriculum");
    if (obj.contains("trainables")) {
        std::string t;
        read_field(obj, "trainables", t, "curriculum");
        if (t == "coefficients") {
            cc.trainables = CurriculumConfig::Trainables::coefficients;
        } else if (t == "all-matrices") {
            cc.trainables = CurriculumConfig::Trainables::all_matrices;
        } else {
            throw_error(ErrorCode::config_error, "unknown trainables '" + t + "'");
        }
    }
    read_field(obj, "seed", cc.seed, "curriculum");
    if (obj.contains("mode")) {
        read_field(obj, "mode", cfg.curriculum_mode, "curriculum");
        if (cfg.curriculum_mode != "sectionwise" && cfg.curriculum_mode != "onepass") {
            throw_error(ErrorCode::config_error,
                        "unknown curriculum mode '" + cfg.curriculum_mode + "'");
        }
    }
    validate_curriculum_config(cc);
}

inline void parse_paths_section(const nlohmann::json& obj, PipelinePaths& paths) {
    check_keys(obj, {"corpus", "probe", "qa", "holdout_qa", "checkpoint", "out", "documents"},
               "paths");
    read_field(obj, "corpus", paths.corpus, "paths");
    read_field(obj, "probe", paths.probe, "paths");
    read_field(obj, "qa", paths.qa, "paths");
    read_field(obj, "holdout_qa", paths.holdout_qa, "paths");
    read_field(obj, "checkpoint", paths.checkpoint, "paths");
    read_field(obj, "out", paths.out, "paths");
    read_field(obj, "documents", paths.documents, "paths");
}

inline void parse_ablation_section(const nlohmann::json& obj, AblationAxes& ax) {
    check_keys(obj, {"layouts", "align", "etas", "curricula"}, "ablation");
    if (obj.contains("layouts")) {
        std::vector<std::string> kinds;
        read_field(obj, "layouts", kinds, "ablation");
        ax.layouts.clear();
        for (const std::string& k : kinds) {
            ax.layouts.push_back(parse_layout_kind(k, "ablation.layouts"));
        }
    }
    if (obj.contains("align")) {
        read_field(obj, "align", ax.align_flags, "ablation");
    }
    read_field(obj, "etas", ax.etas, "ablation");
    if (obj.contains("curricula")) {
        read_field(obj, "curricula", ax.curricula, "ablation");
        for (const std::string& c : ax.curricula) {
            if (c != "sectionwise" && c != "onepass") {
                throw_error(ErrorCode::config_error,
                            "unknown curriculum '" + c + "' in ablation.curricula");
            }
        }
    }
    for (double eta : ax.etas) {
        if (!(eta > 0.0 && eta <= 1.0)) {
            throw_error(ErrorCode::config_error, "ablation eta out of (0, 1]");
        }
    }
    if (ax.layouts.empty() || ax.align_flags.empty() || ax.etas.empty() ||
        ax.curricula.empty()) {
        throw_error(ErrorCode::config_error, "ablation axes must be nonempty");
    }
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& root) {
    if (!root.is_object()) {
        throw_error(ErrorCode::config_error, "config root must be a JSON object");
    }
    detail::check_keys(root,
                       {"model", "layout", "rank_policy", "truncation_policy", "align",
                        "curriculum", "paths", "ablation"},
                       "config root");
    PipelineConfig cfg;
    if (root.contains("model")) detail::parse_model_section(root.at("model"), cfg.model);
    if (root.contains("layout")) detail::parse_layout_section(root.at("layout"), cfg);
    if (root.contains("rank_policy")) {
        detail::parse_rank_policy_section(root.at("rank_policy"), cfg.rank_policy);
    }
    if (root.contains("truncation_policy")) {
        detail::parse_truncation_section(root.at("truncation_policy"), cfg.truncation_policy);
    }
    if (root.contains("align")) detail::parse_align_section(root.at("align"), cfg.align);
    if (root.contains("curriculum")) {
        detail::parse_curriculum_section(root.at("curriculum"), cfg);
    }
    if (root.contains("paths")) detail::parse_paths_section(root.at("paths"), cfg.paths);
    if (root.contains("ablation")) {
        detail::parse_ablation_section(root.at("ablation"), cfg.ablation);
    }
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw_error(ErrorCode::config_error, "cannot open config '" + path + "'");
    }
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::config_error,
                    "config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_pipeline_config(root);
}

}  // namespace qtlc
