// reports.hpp — JSON report documents and CSV curve files.
//
// All floating-point output goes through shortest round-trip formatting so
// reruns with the same seed produce byte-identical files. Wall-time fields
// are the one deliberate exception and are documented as volatile.

#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "qtlc/align.hpp"
#include "qtlc/compressed_model.hpp"
#include "qtlc/curriculum.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/spectral.hpp"

namespace qtlc {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = false;
    for (char c : field) {
        if (c == ',' || c == '"' || c == '\n' || c == '\r') {
            needs_quotes = true;
            break;
        }
    }
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw_error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
        throw_error(ErrorCode::io_error, "write failed for '" + path + "'");
    }
}

inline nlohmann::json align_config_json(const AlignConfig& cfg) {
    nlohmann::json j;
    j["temperature"] = cfg.temperature;
    j["step_size"] = cfg.step_size;
    j["steps"] = cfg.steps;
    j["batch_tokens"] = cfg.batch_tokens;
    j["layer_mask"] = cfg.layer_mask;
    j["kl_weight"] = cfg.kl_weight;
    j["seed"] = cfg.seed;
    j["use_momentum"] = cfg.use_momentum;
    j["momentum"] = cfg.momentum;
    return j;
}

inline nlohmann::json align_report_json(const AlignReport& report) {
    nlohmann::json j;
    j["report_type"] = "align";
    j["config"] = align_config_json(report.config);
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& [step, loss] : report.loss_curve) {
        curve.push_back({{"step", step}, {"loss", loss}});
    }
    j["loss_curve"] = curve;
    j["initial_layer_kl"] = report.initial_layer_kl;
    j["final_layer_kl"] = report.final_layer_kl;
    j["wall_time_seconds"] = report.wall_time_seconds;
    return j;
}

inline std::string align_curve_csv(const AlignReport& report) {
    std::string out = "step,loss\n";
    for (const auto& [step, loss] : report.loss_curve) {
        out += std::to_string(step);
        out += ',';
        out += format_double(loss);
        out += '\n';
    }
    return out;
}

inline nlohmann::json curriculum_config_json(const CurriculumConfig& cfg) {
    nlohmann::json j;
    j["questions_per_section_cap"] = cfg.questions_per_section_cap;
    j["epochs"] = cfg.epochs;
    j["steps_per_chunk"] = cfg.steps_per_chunk;
    j["step_size"] = cfg.step_size;
    j["trainables"] = cfg.trainables == CurriculumConfig::Trainables::coefficients
                          ? "coefficients"
                          : "all-matrices";
    j["seed"] = cfg.seed;
    return j;
}

inline nlohmann::json finetune_report_json(const FinetuneReport& report) {
    nlohmann::json j;
    j["report_type"] = "finetune";
    j["config"] = curriculum_config_json(report.config);
    nlohmann::json chunks = nlohmann::json::array();
    for (const ChunkRecord& c : report.chunks) {
        chunks.push_back({{"epoch", c.epoch},
                          {"doc_id", c.doc_id},
                          {"section_index", c.section_index},
                          {"example_count", c.example_count},
                          {"skipped", c.skipped}});
    }
    j["chunks"] = chunks;
    nlohmann::json curve = nlohmann::json::array();
    for (const CurvePoint& p : report.curve) {
        curve.push_back({{"epoch", p.epoch},
                         {"doc_id", p.doc_id},
                         {"section_index", p.section_index},
                         {"step", p.step},
                         {"loss", p.loss}});
    }
    j["curve"] = curve;
    nlohmann::json probe;
    probe["available"] = report.has_probe;
    probe["pre_perplexity"] = report.has_probe ? report.pre_probe_perplexity : 0.0;
    probe["post_perplexity"] = report.has_probe ? report.post_probe_perplexity : 0.0;
    j["probe"] = probe;
    nlohmann::json holdout;
    holdout["available"] = report.has_holdout;
    holdout["pre_answer_loss"] = report.has_holdout ? report.pre_holdout_answer_loss : 0.0;
    holdout["post_answer_loss"] = report.has_holdout ? report.post_holdout_answer_loss : 0.0;
    j["holdout"] = holdout;
    return j;
}

inline std::string finetune_curve_csv(const FinetuneReport& report) {
    std::string out = "epoch,doc_id,section_index,step,loss\n";
    for (const CurvePoint& p : report.curve) {
        out += std::to_string(p.epoch);
        out += ',';
        out += csv_escape(p.doc_id);
        out += ',';
        out += std::to_string(p.section_index);
        out += ',';
        out += std::to_string(p.step);
        out += ',';
        out += format_double(p.loss);
        out += '\n';
    }
    return out;
}

namespace detail {

inline nlohmann::json histogram_json(const std::map<std::size_t, std::size_t>& hist) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, count] : hist) {
        j[std::to_string(key)] = count;
    }
    return j;
}

}  // namespace detail

inline nlohmann::json stats_report_json(const CompressedModel& cm) {
    nlohmann::json j;
    j["report_type"] = "stats";
    std::size_t original = 0;
    for (const auto& [name, m] : cm.dense) {
        original += m.rows * m.cols;
    }
    std::size_t stored_total = 0;
    std::size_t metadata_total = 0;
    std::size_t compressed_original = 0;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& [name, layer] : cm.layers) {
        original += layer.rows * layer.cols;
        compressed_original += layer.rows * layer.cols;
        CompressionStats stats = compression_stats(layer);
        stored_total += stats.stored_value_count;
        metadata_total += stats.metadata_value_count;
        nlohmann::json lj;
        lj["name"] = name;
        lj["rows"] = layer.rows;
        lj["cols"] = layer.cols;
        lj["original_params"] = layer.rows * layer.cols;
        lj["stored_coefficients"] = stats.stored_value_count;
        lj["metadata_values"] = stats.metadata_value_count;
        lj["compression_ratio"] = stats.ratio_is_infinite ? 0.0 : stats.compression_ratio;
        lj["ratio_is_infinite"] = stats.ratio_is_infinite;
        lj["tile_count"] = layer.spectral_blocks.size();
        lj["rank_histogram"] = detail::histogram_json(stats.rank_histogram);
        lj["coeff_count_histogram"] = detail::histogram_json(stats.coeff_count_histogram);
        layers.push_back(lj);
    }
    j["layers"] = layers;
    j["original_parameter_count"] = original;
    j["stored_coefficient_count"] = stored_total;
    j["metadata_value_count"] = metadata_total;
    bool infinite = stored_total == 0;
    j["compression_ratio"] =
        infinite ? 0.0
                 : static_cast<double>(compressed_original) / static_cast<double>(stored_total);
    j["ratio_is_infinite"] = infinite;
    return j;
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace qtlc
