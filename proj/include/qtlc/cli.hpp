// cli.hpp — subcommand implementations behind the qtlc binary.
//
// Contract: stdout carries exactly one machine-readable JSON document per
// invocation (or nothing before a crash); everything meant for a human goes
// to stderr. Exit codes: 0 success, 2 bad configuration or usage, 3 write
// failure, 4 corrupt or checksum-failed checkpoint, 5 unsupported format
// version, 6 any other module error.

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"

#include "qtlc/ablation.hpp"
#include "qtlc/align.hpp"
#include "qtlc/checkpoint.hpp"
#include "qtlc/compressed_model.hpp"
#include "qtlc/config.hpp"
#include "qtlc/curriculum.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/reports.hpp"
#include "qtlc/toy_model.hpp"

namespace qtlc {

struct CliOptions {
    std::string config_path;
    std::string checkpoint_path;
    std::string out_path;
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool quiet = false;
};

inline int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::config_error:
            return 2;
        case ErrorCode::io_error:
            return 3;
        case ErrorCode::checksum_error:
        case ErrorCode::corrupt_block:
            return 4;
        case ErrorCode::format_version_error:
            return 5;
        default:
            return 6;
    }
}

inline nlohmann::json error_json(const std::string& code, const std::string& message) {
    nlohmann::json j;
    j["error"] = {{"code", code}, {"message", message}};
    return j;
}

namespace detail {

inline std::string read_file_string(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw_error(ErrorCode::io_error, "cannot open '" + path + "' for reading");
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::vector<std::int32_t> read_file_tokens(const std::string& path) {
    return string_to_tokens(read_file_string(path));
}

inline std::string file_stem(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    return base;
}

inline std::uint64_t now_timestamp() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count());
}

inline std::string strip_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() >= suffix.size() &&
        s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return s.substr(0, s.size() - suffix.size());
    }
    return s;
}

}  // namespace detail

inline void apply_cli_overrides(PipelineConfig& cfg, const CliOptions& opts) {
    if (opts.has_seed) {
        cfg.model.seed = opts.seed;
        cfg.align.seed = opts.seed;
        cfg.curriculum.seed = opts.seed;
    }
    if (!opts.checkpoint_path.empty()) cfg.paths.checkpoint = opts.checkpoint_path;
    if (!opts.out_path.empty()) cfg.paths.out = opts.out_path;
}

inline std::string resolve_out(const PipelineConfig& cfg, const std::string& fallback) {
    return cfg.paths.out.empty() ? fallback : cfg.paths.out;
}

inline std::string require_checkpoint(const PipelineConfig& cfg) {
    if (cfg.paths.checkpoint.empty()) {
        throw_error(ErrorCode::config_error, "a checkpoint path is required");
    }
    return cfg.paths.checkpoint;
}

inline std::vector<Section> load_documents(const std::vector<std::string>& paths) {
    if (paths.empty()) {
        throw_error(ErrorCode::config_error, "paths.documents must list at least one file");
    }
    std::vector<Section> all;
    for (const std::string& path : paths) {
        std::vector<Section> sections =
            segment_document(detail::read_file_string(path), detail::file_stem(path));
        all.insert(all.end(), sections.begin(), sections.end());
    }
    return all;
}

inline nlohmann::json cmd_compress(const PipelineConfig& cfg) {
    const ToyModel model = init_toy_model(cfg.model);
    const CompressedModel cm =
        compress_model(model, cfg.layout_kind, cfg.catalog, cfg.rank_policy,
                       cfg.truncation_policy, cfg.seed_offset);
    const std::string out = resolve_out(cfg, "model.qtlc");
    write_checkpoint(cm, out, detail::now_timestamp());
    nlohmann::json j = stats_report_json(cm);
    j["output_path"] = out;
    return j;
}

inline nlohmann::json cmd_decompress(const PipelineConfig& cfg) {
    const CheckpointData data = read_checkpoint(require_checkpoint(cfg));
    const ToyModel model = build_model(data.model);
    CompressedModel dense;
    dense.config = data.model.config;
    dense.dense = model.params;
    const std::string out = resolve_out(cfg, "dense.qtlc");
    write_checkpoint(dense, out, detail::now_timestamp());
    nlohmann::json j;
    j["report_type"] = "decompress";
    j["output_path"] = out;
    nlohmann::json names = nlohmann::json::array();
    for (const auto& [name, cl] : data.model.layers) names.push_back(name);
    j["decompressed_layers"] = names;
    j["parameter_count"] = model_param_count(model);
    return j;
}

inline nlohmann::json cmd_align(const PipelineConfig& cfg, bool quiet) {
    if (cfg.paths.corpus.empty()) {
        throw_error(ErrorCode::config_error, "align requires paths.corpus");
    }
    const CheckpointData data = read_checkpoint(require_checkpoint(cfg));
    const ToyModel orig = init_toy_model(data.model.config);
    const std::vector<std::int32_t> corpus = detail::read_file_tokens(cfg.paths.corpus);
    if (!quiet) {
        std::fprintf(stderr, "aligning %zu steps over %zu corpus tokens\n", cfg.align.steps,
                     corpus.size());
    }
    auto [aligned, report] = align_compressed(orig, data.model, corpus, cfg.align);
    const std::string out = resolve_out(cfg, "aligned.qtlc");
    write_checkpoint(aligned, out, detail::now_timestamp());
    nlohmann::json j = align_report_json(report);
    write_text_file(out + ".align.json", dump_json(j));
    write_text_file(out + ".align.csv", align_curve_csv(report));
    j["output_path"] = out;
    return j;
}

inline nlohmann::json cmd_finetune(const PipelineConfig& cfg, bool quiet) {
    if (cfg.paths.qa.empty()) {
        throw_error(ErrorCode::config_error, "finetune requires paths.qa");
    }
    const CheckpointData data = read_checkpoint(require_checkpoint(cfg));
    const std::vector<Section> sections = load_documents(cfg.paths.documents);
    const std::vector<QAPair> qa =
        load_qa_dataset(cfg.paths.qa, cfg.curriculum.questions_per_section_cap, &sections);
    std::vector<QAPair> holdout;
    if (!cfg.paths.holdout_qa.empty()) {
        holdout = load_qa_dataset(cfg.paths.holdout_qa,
                                  cfg.curriculum.questions_per_section_cap, &sections);
    }
    std::vector<std::int32_t> probe;
    if (!cfg.paths.probe.empty()) probe = detail::read_file_tokens(cfg.paths.probe);

    const ToyModel start = build_model(data.model);
    if (!quiet) {
        std::fprintf(stderr, "fine-tuning %zu sections, %zu qa pairs, %s mode\n",
                     sections.size(), qa.size(), cfg.curriculum_mode.c_str());
    }
    const FinetuneResult result =
        cfg.curriculum_mode == "onepass"
            ? finetune_onepass(start, data.model, sections, qa, cfg.curriculum, probe, holdout)
            : finetune_sectionwise(start, data.model, sections, qa, cfg.curriculum, probe,
                                   holdout);

    const std::string out = resolve_out(cfg, "finetuned.qtlc");
    if (cfg.curriculum.trainables == CurriculumConfig::Trainables::coefficients) {
        write_checkpoint(result.compressed, out, detail::now_timestamp());
    } else {
        CompressedModel dense;
        dense.config = result.model.config;
        dense.dense = result.model.params;
        write_checkpoint(dense, out, detail::now_timestamp());
    }
    nlohmann::json j = finetune_report_json(result.report);
    write_text_file(out + ".finetune.json", dump_json(j));
    write_text_file(out + ".finetune.csv", finetune_curve_csv(result.report));
    j["output_path"] = out;
    return j;
}

inline nlohmann::json cmd_eval(const PipelineConfig& cfg) {
    if (cfg.paths.corpus.empty()) {
        throw_error(ErrorCode::config_error, "eval requires paths.corpus");
    }
    const CheckpointData data = read_checkpoint(require_checkpoint(cfg));
    const ToyModel orig = init_toy_model(data.model.config);
    const ToyModel comp = build_model(data.model);
    const std::vector<std::int32_t> corpus = detail::read_file_tokens(cfg.paths.corpus);
    const std::vector<double> layer_kl = hidden_divergence_eval(orig, comp, corpus, cfg.align);

    nlohmann::json j;
    j["report_type"] = "eval";
    j["per_layer_kl"] = layer_kl;
    nlohmann::json probe;
    probe["available"] = !cfg.paths.probe.empty();
    probe["perplexity"] = 0.0;
    if (!cfg.paths.probe.empty()) {
        probe["perplexity"] = forgetting_probe(comp, detail::read_file_tokens(cfg.paths.probe));
    }
    j["probe"] = probe;
    std::size_t dense_count = 0;
    for (const auto& [name, m] : data.model.dense) dense_count += m.rows * m.cols;
    j["parameter_counts"] = {{"original", model_param_count(comp)},
                             {"stored_coefficients", stored_coefficient_count(data.model)},
                             {"dense", dense_count}};
    return j;
}

inline nlohmann::json cmd_stats(const PipelineConfig& cfg) {
    const CheckpointData data = read_checkpoint(require_checkpoint(cfg));
    return stats_report_json(data.model);
}

inline nlohmann::json cmd_ablate(const PipelineConfig& cfg, bool quiet) {
    if (cfg.paths.corpus.empty() || cfg.paths.probe.empty() || cfg.paths.qa.empty()) {
        throw_error(ErrorCode::config_error,
                    "ablate requires paths.corpus, paths.probe, and paths.qa");
    }
    const std::vector<std::int32_t> corpus = detail::read_file_tokens(cfg.paths.corpus);
    const std::vector<std::int32_t> probe = detail::read_file_tokens(cfg.paths.probe);
    const std::vector<Section> sections = load_documents(cfg.paths.documents);
    const std::vector<QAPair> qa =
        load_qa_dataset(cfg.paths.qa, cfg.curriculum.questions_per_section_cap, &sections);
    std::vector<QAPair> holdout;
    if (!cfg.paths.holdout_qa.empty()) {
        holdout = load_qa_dataset(cfg.paths.holdout_qa,
                                  cfg.curriculum.questions_per_section_cap, &sections);
    }

    const std::vector<AblationRow> rows =
        run_ablation(cfg, corpus, probe, sections, qa, holdout);

    const std::string out = resolve_out(cfg, "ablation.csv");
    write_text_file(out, ablation_csv(rows));
    const std::string base = detail::strip_suffix(out, ".csv");
    std::size_t failed = 0;
    nlohmann::json row_summaries = nlohmann::json::array();
    for (const AblationRow& row : rows) {
        const std::string tag = ablation_cell_tag(row);
        if (row.has_align_report) {
            write_text_file(base + "." + tag + ".align.csv",
                            align_curve_csv(row.align_report));
        }
        if (row.ok) {
            write_text_file(base + "." + tag + ".finetune.csv",
                            finetune_curve_csv(row.finetune_report));
        } else {
            ++failed;
            if (!quiet) {
                std::fprintf(stderr, "cell %s failed: %s\n", tag.c_str(), row.error.c_str());
            }
        }
        row_summaries.push_back({{"layout", layout_kind_name(row.layout)},
                                 {"eta", row.eta},
                                 {"align", row.align_on},
                                 {"curriculum", row.curriculum},
                                 {"status", row.ok ? "ok" : "failed"},
                                 {"stored_values", row.stored_values},
                                 {"hidden_divergence", row.hidden_divergence},
                                 {"domain_loss", row.domain_loss},
                                 {"probe_perplexity", row.probe_perplexity},
                                 {"wall_time_seconds", row.wall_time_seconds}});
    }
    if (!rows.empty() && failed == rows.size()) {
        throw_error(ErrorCode::data_error, "every ablation cell failed; see " + out);
    }
    nlohmann::json j;
    j["report_type"] = "ablate";
    j["output_path"] = out;
    j["cell_count"] = rows.size();
    j["failed_cell_count"] = failed;
    j["rows"] = row_summaries;
    return j;
}

}  // namespace qtlc
