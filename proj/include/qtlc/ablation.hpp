// ablation.hpp — the 2x2x3x2 sweep over layout kind, alignment on/off,
// truncation energy, and curriculum mode. Cells are independent: a failure
// is recorded in its row and the sweep keeps going.

#pragma once

#include <chrono>
#include <cstdint>
#include <exception>
#include <string>
#include <vector>

#include "qtlc/align.hpp"
#include "qtlc/compressed_model.hpp"
#include "qtlc/config.hpp"
#include "qtlc/curriculum.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/reports.hpp"
#include "qtlc/spectral.hpp"
#include "qtlc/tiling.hpp"
#include "qtlc/toy_model.hpp"

namespace qtlc {

inline const char* layout_kind_name(LayoutKind kind) {
    return kind == LayoutKind::quasiperiodic ? "quasiperiodic" : "uniform";
}

struct AblationRow {
    LayoutKind layout = LayoutKind::quasiperiodic;
    double eta = 0.0;
    bool align_on = false;
    std::string curriculum;

    bool ok = false;
    std::string error;
    std::size_t stored_values = 0;
    double hidden_divergence = 0.0;
    double domain_loss = 0.0;
    double probe_perplexity = 0.0;
    double wall_time_seconds = 0.0;

    bool has_align_report = false;
    AlignReport align_report;
    FinetuneReport finetune_report;
};

inline std::string ablation_cell_tag(const AblationRow& row) {
    std::string eta = format_double(row.eta);
    for (char& c : eta) {
        if (c == '.') c = 'p';
    }
    std::string tag = layout_kind_name(row.layout);
    tag += "_eta";
    tag += eta;
    tag += row.align_on ? "_alignon" : "_alignoff";
    tag += "_";
    tag += row.curriculum;
    return tag;
}

inline std::vector<AblationRow> run_ablation(const PipelineConfig& cfg,
                                             const std::vector<std::int32_t>& corpus,
                                             const std::vector<std::int32_t>& probe,
                                             const std::vector<Section>& sections,
                                             const std::vector<QAPair>& qa,
                                             const std::vector<QAPair>& holdout_qa) {
    const ToyModel orig = init_toy_model(cfg.model);
    std::vector<AblationRow> rows;

    for (LayoutKind layout : cfg.ablation.layouts) {
        for (bool align_on : cfg.ablation.align_flags) {
            for (double eta : cfg.ablation.etas) {
                for (const std::string& curriculum : cfg.ablation.curricula) {
                    AblationRow row;
                    row.layout = layout;
                    row.eta = eta;
                    row.align_on = align_on;
                    row.curriculum = curriculum;
                    const auto t0 = std::chrono::steady_clock::now();
                    try {
                        CompressedModel cm =
                            compress_model(orig, layout, cfg.catalog, cfg.rank_policy,
                                           TruncationPolicy::energy(eta), cfg.seed_offset);
                        if (align_on) {
                            auto [aligned, report] =
                                align_compressed(orig, cm, corpus, cfg.align);
                            cm = std::move(aligned);
                            row.align_report = std::move(report);
                            row.has_align_report = true;
                        }
                        FinetuneResult ft =
                            curriculum == "onepass"
                                ? finetune_onepass(orig, cm, sections, qa, cfg.curriculum,
                                                   probe, holdout_qa)
                                : finetune_sectionwise(orig, cm, sections, qa,
                                                       cfg.curriculum, probe, holdout_qa);
                        row.finetune_report = ft.report;
                        row.stored_values = stored_coefficient_count(ft.compressed);
                        const std::vector<double> layer_kl =
                            hidden_divergence_eval(orig, ft.model, corpus, cfg.align);
                        double kl_sum = 0.0;
                        for (double v : layer_kl) kl_sum += v;
                        row.hidden_divergence =
                            layer_kl.empty() ? 0.0
                                             : kl_sum / static_cast<double>(layer_kl.size());
                        row.domain_loss = mean_answer_loss(ft.model, sections, qa);
                        row.probe_perplexity = forgetting_probe(ft.model, probe);
                        row.ok = true;
                    } catch (const Error& e) {
                        row.ok = false;
                        row.error = e.what();
                    } catch (const std::exception& e) {
                        row.ok = false;
                        row.error = e.what();
                    }
                    const auto t1 = std::chrono::steady_clock::now();
                    row.wall_time_seconds =
                        std::chrono::duration<double>(t1 - t0).count();
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out =
        "layout,eta,align,curriculum,stored_values,hidden_divergence,"
        "domain_loss,probe_perplexity,wall_time_seconds,status,error\n";
    for (const AblationRow& row : rows) {
        out += layout_kind_name(row.layout);
        out += ',';
        out += format_double(row.eta);
        out += ',';
        out += row.align_on ? "on" : "off";
        out += ',';
        out += row.curriculum;
        out += ',';
        if (row.ok) {
            out += std::to_string(row.stored_values);
            out += ',';
            out += format_double(row.hidden_divergence);
            out += ',';
            out += format_double(row.domain_loss);
            out += ',';
            out += format_double(row.probe_perplexity);
        } else {
            out += ",,,";
        }
        out += ',';
        out += format_double(row.wall_time_seconds);
        out += ',';
        out += row.ok ? "ok" : "failed";
        out += ',';
        out += csv_escape(row.error);
        out += '\n';
    }
    return out;
}

}  // namespace qtlc
