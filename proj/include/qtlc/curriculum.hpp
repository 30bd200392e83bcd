// curriculum.hpp — stage-III section-wise Q&A fine-tuning.
//
// Documents are segmented at headings, Q&A pairs are ingested from JSONL,
// and training walks (epoch, document, section) in order, a few gradient
// steps per chunk. Examples are byte sequences "<body>\n\nQ: <q>\n[R:
// <rationale>\n]A: <answer>", left-truncated to max_seq, with the loss
// masked to rationale and answer bytes.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "qtlc/align.hpp"
#include "qtlc/compressed_model.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/rng.hpp"
#include "qtlc/toy_model.hpp"

namespace qtlc {

struct Section {
    std::string doc_id;
    std::size_t index = 0;
    std::string title;  // empty for the preamble
    std::string body;
};

struct QAPair {
    std::string doc_id;
    std::size_t section_index = 0;
    std::string question;
    std::string answer;
    std::optional<std::string> rationale;
};

struct CurriculumConfig {
    enum class Trainables { coefficients, all_matrices };
    std::size_t questions_per_section_cap = 5;
    std::size_t epochs = 1;
    std::size_t steps_per_chunk = 4;
    double step_size = 5e-3;
    Trainables trainables = Trainables::coefficients;
    std::uint64_t seed = 0;
};

inline void validate_curriculum_config(const CurriculumConfig& cfg) {
    if (cfg.questions_per_section_cap < 1) {
        throw_error(ErrorCode::config_error, "questions_per_section_cap must be >= 1");
    }
    if (cfg.epochs < 1) {
        throw_error(ErrorCode::config_error, "epochs must be >= 1");
    }
    if (!(cfg.step_size > 0.0)) {
        throw_error(ErrorCode::config_error, "curriculum step_size must be > 0");
    }
}

inline std::vector<std::int32_t> string_to_tokens(const std::string& text) {
    std::vector<std::int32_t> tokens;
    tokens.reserve(text.size());
    for (unsigned char c : text) tokens.push_back(static_cast<std::int32_t>(c));
    return tokens;
}

namespace detail {

inline std::string trim_copy(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

inline bool is_blank(const std::string& s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

// ALL-CAPS heading: short line of at most 8 words, at least one letter, no
// lowercase letters.
inline bool is_caps_heading(const std::string& line) {
    const std::string t = trim_copy(line);
    if (t.empty()) return false;
    bool has_letter = false;
    for (char c : t) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::islower(uc)) return false;
        if (std::isupper(uc)) has_letter = true;
    }
    if (!has_letter) return false;
    std::istringstream words(t);
    std::string word;
    std::size_t count = 0;
    while (words >> word) ++count;
    return count <= 8;
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            if (!current.empty() && current.back() == '\r') current.pop_back();
            lines.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty() && current.back() == '\r') current.pop_back();
    lines.push_back(std::move(current));
    return lines;
}

}  // namespace detail

/// Split a document into sections at heading lines: '#'-prefixed lines, or
/// ALL-CAPS lines (<= 8 words) followed by a blank line. Text before the
/// first heading becomes section 0 with an empty title. Sections whose body
/// trims to nothing are dropped; indices stay contiguous.
inline std::vector<Section> segment_document(const std::string& text,
                                             const std::string& doc_id = "") {
    if (detail::trim_copy(text).empty()) {
        throw_error(ErrorCode::data_error, "document is empty");
    }
    const std::vector<std::string> lines = detail::split_lines(text);

    std::vector<Section> sections;
    std::string current_title;
    std::string current_body;
    auto flush = [&]() {
        const std::string body = detail::trim_copy(current_body);
        current_body.clear();
        if (body.empty()) return;
        Section s;
        s.doc_id = doc_id;
        s.index = sections.size();
        s.title = current_title;
        s.body = body;
        sections.push_back(std::move(s));
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (!line.empty() && line[0] == '#') {
            flush();
            std::size_t pos = 0;
            while (pos < line.size() && line[pos] == '#') ++pos;
            current_title = detail::trim_copy(line.substr(pos));
            continue;
        }
        if (detail::is_caps_heading(line) && i + 1 < lines.size() &&
            detail::is_blank(lines[i + 1])) {
            flush();
            current_title = detail::trim_copy(line);
            continue;
        }
        current_body += line;
        current_body += '\n';
    }
    flush();
    return sections;
}

/// Parse the JSONL Q&A file: one object per line with keys doc_id,
/// section_index, question, answer and optional rationale; anything else is
/// rejected. Per-section counts are capped keep-first. When sections are
/// supplied, every pair must reference one of them.
inline std::vector<QAPair> load_qa_dataset(const std::string& path, std::size_t cap = 5,
                                           const std::vector<Section>* sections = nullptr) {
    if (cap < 1) {
        throw_error(ErrorCode::config_error, "qa cap must be >= 1");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw_error(ErrorCode::io_error, "cannot open qa dataset '" + path + "'");
    }

    std::map<std::pair<std::string, std::size_t>, bool> known_sections;
    if (sections != nullptr) {
        for (const Section& s : *sections) known_sections[{s.doc_id, s.index}] = true;
    }

    std::vector<QAPair> pairs;
    std::map<std::pair<std::string, std::size_t>, std::size_t> per_section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_blank(line)) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw_error(ErrorCode::parse_error,
                        "qa line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.is_object()) {
            throw_error(ErrorCode::parse_error,
                        "qa line " + std::to_string(line_no) + ": record is not an object");
        }
        for (const auto& [key, value] : obj.items()) {
            if (key != "doc_id" && key != "section_index" && key != "question" &&
                key != "answer" && key != "rationale") {
                throw_error(ErrorCode::parse_error, "qa line " + std::to_string(line_no) +
                                                        ": unknown key '" + key + "'");
            }
        }
        QAPair qa;
        try {
            qa.doc_id = obj.at("doc_id").get<std::string>();
            const long long idx = obj.at("section_index").get<long long>();
            if (idx < 0) {
                throw_error(ErrorCode::parse_error, "qa line " + std::to_string(line_no) +
                                                        ": negative section_index");
            }
            qa.section_index = static_cast<std::size_t>(idx);
            qa.question = obj.at("question").get<std::string>();
            qa.answer = obj.at("answer").get<std::string>();
            if (obj.contains("rationale")) {
                qa.rationale = obj.at("rationale").get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw_error(ErrorCode::parse_error,
                        "qa line " + std::to_string(line_no) + ": " + e.what());
        }
        if (qa.question.empty() || qa.answer.empty()) {
            throw_error(ErrorCode::parse_error, "qa line " + std::to_string(line_no) +
                                                    ": question and answer must be nonempty");
        }
        if (sections != nullptr && !known_sections.count({qa.doc_id, qa.section_index})) {
            throw_error(ErrorCode::reference_error,
                        "qa line " + std::to_string(line_no) + ": no section " +
                            std::to_string(qa.section_index) + " in document '" + qa.doc_id +
                            "'");
        }
        auto& count = per_section[{qa.doc_id, qa.section_index}];
        if (count < cap) {
            pairs.push_back(std::move(qa));
            ++count;
        }
    }
    return pairs;
}

struct TrainingExample {
    std::vector<std::int32_t> tokens;
    std::vector<std::int32_t> targets;
    std::vector<std::uint8_t> mask;  // 1 where the predicted byte is in the loss span
};

/// Byte-level training example for one (section, Q&A) pair. Left-truncated
/// to max_seq so the answer always survives in full.
inline TrainingExample build_training_example(const Section& section, const QAPair& qa,
                                              std::size_t max_seq) {
    std::string text = section.body + "\n\nQ: " + qa.question + "\n";
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (qa.rationale) {
        text += "R: ";
        const std::size_t r_start = text.size();
        text += *qa.rationale;
        spans.emplace_back(r_start, text.size());
        text += '\n';
    }
    text += "A: ";
    const std::size_t a_start = text.size();
    text += qa.answer;
    spans.emplace_back(a_start, text.size());

    std::size_t offset = 0;
    if (text.size() > max_seq) {
        offset = text.size() - max_seq;
        text = text.substr(offset);
    }

    TrainingExample ex;
    ex.tokens = string_to_tokens(text);
    const std::size_t n = ex.tokens.size();
    ex.targets.assign(n, 0);
    ex.mask.assign(n, 0);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        ex.targets[t] = ex.tokens[t + 1];
        const std::size_t byte_pos = offset + t + 1;  // position of the predicted byte
        for (const auto& [s_begin, s_end] : spans) {
            if (byte_pos >= s_begin && byte_pos < s_end) {
                ex.mask[t] = 1;
                break;
            }
        }
    }
    return ex;
}

/// exp(mean next-token cross-entropy) over the probe stream, evaluated in
/// non-overlapping max_seq windows.
inline double forgetting_probe(const ToyModel& model,
                               const std::vector<std::int32_t>& probe_corpus) {
    if (probe_corpus.empty()) {
        throw_error(ErrorCode::data_error, "probe corpus is empty");
    }
    double ce_sum = 0.0;
    std::size_t count = 0;
    for (const auto& window : split_windows(probe_corpus, model.config.max_seq)) {
        if (window.size() < 2) continue;
        const ForwardTrace trace = forward(model, window);
        for (std::size_t t = 0; t + 1 < window.size(); ++t) {
            ce_sum += cross_entropy_row(trace.logits.row_ptr(t), model.config.vocab,
                                        static_cast<std::size_t>(window[t + 1]));
            ++count;
        }
    }
    if (count == 0) {
        throw_error(ErrorCode::data_error, "probe corpus has no predictable positions");
    }
    return std::exp(ce_sum / static_cast<double>(count));
}

/// Mean over examples of the masked mean cross-entropy; the held-out Q&A
/// evaluation.
inline double mean_answer_loss(const ToyModel& model, const std::vector<Section>& sections,
                               const std::vector<QAPair>& qa) {
    if (qa.empty()) {
        throw_error(ErrorCode::data_error, "no qa pairs to evaluate");
    }
    std::map<std::pair<std::string, std::size_t>, const Section*> lookup;
    for (const Section& s : sections) lookup[{s.doc_id, s.index}] = &s;
    double sum = 0.0;
    for (const QAPair& pair : qa) {
        auto it = lookup.find({pair.doc_id, pair.section_index});
        if (it == lookup.end()) {
            throw_error(ErrorCode::reference_error,
                        "qa pair references missing section " +
                            std::to_string(pair.section_index) + " of '" + pair.doc_id + "'");
        }
        const TrainingExample ex =
            build_training_example(*it->second, pair, model.config.max_seq);
        auto [loss, grads] = backward(model, ex.tokens,
                                      LossSpec::cross_entropy(ex.targets, ex.mask));
        (void)grads;
        sum += loss;
    }
    return sum / static_cast<double>(qa.size());
}

struct ChunkRecord {
    std::size_t epoch = 0;
    std::string doc_id;
    std::size_t section_index = 0;
    std::size_t example_count = 0;
    bool skipped = false;  // no Q&A pairs for this section
};

struct CurvePoint {
    std::size_t epoch = 0;
    std::string doc_id;
    std::size_t section_index = 0;
    std::size_t step = 0;
    double loss = 0.0;
};

struct FinetuneReport {
    std::vector<ChunkRecord> chunks;
    std::vector<CurvePoint> curve;  // ordered by (epoch, doc, section, step)
    bool has_probe = false;
    double pre_probe_perplexity = 0.0;
    double post_probe_perplexity = 0.0;
    bool has_holdout = false;
    double pre_holdout_answer_loss = 0.0;
    double post_holdout_answer_loss = 0.0;
    CurriculumConfig config;
};

struct FinetuneResult {
    ToyModel model;
    CompressedModel compressed;
    FinetuneReport report;
};

namespace detail {

struct SectionExamples {
    const Section* section = nullptr;
    std::vector<TrainingExample> examples;
};

// Documents in order of first appearance; per-doc sections in sequence
// order; per-section examples capped keep-first.
inline std::vector<SectionExamples> collect_chunks(const std::vector<Section>& sections,
                                                   const std::vector<QAPair>& qa,
                                                   std::size_t cap, std::size_t max_seq) {
    std::map<std::pair<std::string, std::size_t>, std::vector<const QAPair*>> by_section;
    for (const QAPair& pair : qa) {
        auto& list = by_section[{pair.doc_id, pair.section_index}];
        if (list.size() < cap) list.push_back(&pair);
    }
    std::vector<SectionExamples> chunks;
    chunks.reserve(sections.size());
    for (const Section& s : sections) {
        SectionExamples se;
        se.section = &s;
        auto it = by_section.find({s.doc_id, s.index});
        if (it != by_section.end()) {
            for (const QAPair* pair : it->second) {
                se.examples.push_back(build_training_example(s, *pair, max_seq));
            }
        }
        chunks.push_back(std::move(se));
    }
    return chunks;
}

// One mean-gradient step over a list of examples. Returns the mean loss;
// fills grads with the mean GradientSet (reduced in example order).
inline double chunk_loss_and_grads(const ToyModel& model,
                                   const std::vector<TrainingExample>& examples,
                                   GradientSet& grads) {
    grads.clear();
    for (const auto& [name, m] : model.params) grads.emplace(name, RealMatrix(m.rows, m.cols));
    double loss_sum = 0.0;
    for (const TrainingExample& ex : examples) {
        auto [loss, g] = backward(model, ex.tokens,
                                  LossSpec::cross_entropy(ex.targets, ex.mask));
        loss_sum += loss;
        for (auto& [name, gm] : grads) add_in_place(gm, g.at(name));
    }
    const double inv = 1.0 / static_cast<double>(examples.size());
    for (auto& [name, gm] : grads) scale_in_place(gm, inv);
    return loss_sum * inv;
}

}  // namespace detail

/// Section-wise curriculum loop: for each epoch, document, and section in
/// order, run steps_per_chunk mean-gradient steps on that section's Q&A
/// examples. Trainables are either the retained spectral coefficients
/// (updates flow through the decompression path) or every dense matrix.
inline FinetuneResult finetune_sectionwise(const ToyModel& model, const CompressedModel& cm,
                                           const std::vector<Section>& sections,
                                           const std::vector<QAPair>& qa,
                                           const CurriculumConfig& cfg,
                                           const std::vector<std::int32_t>& probe_corpus = {},
                                           const std::vector<QAPair>& holdout_qa = {}) {
    validate_curriculum_config(cfg);
    const bool on_coeffs = cfg.trainables == CurriculumConfig::Trainables::coefficients;

    FinetuneResult result;
    result.compressed = cm;
    result.model = on_coeffs ? build_model(result.compressed) : model;
    result.report.config = cfg;

    const auto chunks = detail::collect_chunks(sections, qa, cfg.questions_per_section_cap,
                                               result.model.config.max_seq);

    if (!probe_corpus.empty()) {
        result.report.has_probe = true;
        result.report.pre_probe_perplexity = forgetting_probe(result.model, probe_corpus);
    }
    if (!holdout_qa.empty()) {
        result.report.has_holdout = true;
        result.report.pre_holdout_answer_loss =
            mean_answer_loss(result.model, sections, holdout_qa);
    }

    const std::size_t n_coeffs = on_coeffs ? stored_coefficient_count(result.compressed) : 0;
    std::vector<double> coeff_grad(n_coeffs, 0.0);
    std::vector<double> coeff_step(n_coeffs, 0.0);
    GradientSet grads;
    double first_loss = 0.0;
    bool first_recorded = false;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const detail::SectionExamples& chunk : chunks) {
            ChunkRecord rec;
            rec.epoch = epoch;
            rec.doc_id = chunk.section->doc_id;
            rec.section_index = chunk.section->index;
            rec.example_count = chunk.examples.size();
            rec.skipped = chunk.examples.empty();
            result.report.chunks.push_back(rec);
            if (rec.skipped) continue;

            for (std::size_t step = 0; step < cfg.steps_per_chunk; ++step) {
                const double loss =
                    detail::chunk_loss_and_grads(result.model, chunk.examples, grads);
                if (!std::isfinite(loss)) {
                    throw_error(ErrorCode::divergence_error,
                                "fine-tuning loss non-finite at " + chunk.section->doc_id +
                                    " section " + std::to_string(chunk.section->index) +
                                    " step " + std::to_string(step));
                }
                if (!first_recorded) {
                    first_loss = loss;
                    first_recorded = true;
                } else if (first_loss > 0.0 && loss > 10.0 * first_loss) {
                    throw_error(ErrorCode::divergence_error,
                                "fine-tuning loss exceeded 10x initial at " +
                                    chunk.section->doc_id + " section " +
                                    std::to_string(chunk.section->index) + " step " +
                                    std::to_string(step));
                }
                result.report.curve.push_back({epoch, chunk.section->doc_id,
                                               chunk.section->index, step, loss});

                if (on_coeffs) {
                    std::fill(coeff_grad.begin(), coeff_grad.end(), 0.0);
                    detail::accumulate_coeff_grads(result.compressed, grads, coeff_grad);
                    for (std::size_t i = 0; i < n_coeffs; ++i) {
                        coeff_step[i] = cfg.step_size * coeff_grad[i];
                    }
                    detail::apply_coeff_step(result.compressed, coeff_step);
                    result.model = build_model(result.compressed);
                } else {
                    for (auto& [name, m] : result.model.params) {
                        axpy_in_place(m, -cfg.step_size, grads.at(name));
                    }
                }
            }
        }
    }

    if (result.report.has_probe) {
        result.report.post_probe_perplexity = forgetting_probe(result.model, probe_corpus);
    }
    if (result.report.has_holdout) {
        result.report.post_holdout_answer_loss =
            mean_answer_loss(result.model, sections, holdout_qa);
    }
    return result;
}

/// One-pass baseline for the ablation grid: the same examples pooled and
/// seeded-shuffled, one example per update, matching the curriculum's total
/// update budget.
inline FinetuneResult finetune_onepass(const ToyModel& model, const CompressedModel& cm,
                                       const std::vector<Section>& sections,
                                       const std::vector<QAPair>& qa,
                                       const CurriculumConfig& cfg,
                                       const std::vector<std::int32_t>& probe_corpus = {},
                                       const std::vector<QAPair>& holdout_qa = {}) {
    validate_curriculum_config(cfg);
    const bool on_coeffs = cfg.trainables == CurriculumConfig::Trainables::coefficients;

    FinetuneResult result;
    result.compressed = cm;
    result.model = on_coeffs ? build_model(result.compressed) : model;
    result.report.config = cfg;

    const auto chunks = detail::collect_chunks(sections, qa, cfg.questions_per_section_cap,
                                               result.model.config.max_seq);

    struct PoolEntry {
        const detail::SectionExamples* chunk;
        std::size_t example;
    };
    std::vector<PoolEntry> pool;
    std::size_t nonempty_chunks = 0;
    for (const auto& chunk : chunks) {
        ChunkRecord rec;
        rec.epoch = 0;
        rec.doc_id = chunk.section->doc_id;
        rec.section_index = chunk.section->index;
        rec.example_count = chunk.examples.size();
        rec.skipped = chunk.examples.empty();
        result.report.chunks.push_back(rec);
        if (chunk.examples.empty()) continue;
        ++nonempty_chunks;
        for (std::size_t e = 0; e < chunk.examples.size(); ++e) pool.push_back({&chunk, e});
    }

    if (!probe_corpus.empty()) {
        result.report.has_probe = true;
        result.report.pre_probe_perplexity = forgetting_probe(result.model, probe_corpus);
    }
    if (!holdout_qa.empty()) {
        result.report.has_holdout = true;
        result.report.pre_holdout_answer_loss =
            mean_answer_loss(result.model, sections, holdout_qa);
    }

    if (!pool.empty()) {
        SeededRng rng(cfg.seed);
        for (std::size_t i = pool.size() - 1; i > 0; --i) {
            const std::size_t j = rng.next_below(i + 1);
            std::swap(pool[i], pool[j]);
        }
        const std::size_t total_steps = cfg.epochs * nonempty_chunks * cfg.steps_per_chunk;

        const std::size_t n_coeffs =
            on_coeffs ? stored_coefficient_count(result.compressed) : 0;
        std::vector<double> coeff_grad(n_coeffs, 0.0);
        std::vector<double> coeff_step(n_coeffs, 0.0);
        GradientSet grads;
        double first_loss = 0.0;

        for (std::size_t step = 0; step < total_steps; ++step) {
            const PoolEntry& entry = pool[step % pool.size()];
            const std::vector<TrainingExample> single = {entry.chunk->examples[entry.example]};
            const double loss = detail::chunk_loss_and_grads(result.model, single, grads);
            if (!std::isfinite(loss)) {
                throw_error(ErrorCode::divergence_error,
                            "one-pass loss non-finite at step " + std::to_string(step));
            }
            if (step == 0) {
                first_loss = loss;
            } else if (first_loss > 0.0 && loss > 10.0 * first_loss) {
                throw_error(ErrorCode::divergence_error,
                            "one-pass loss exceeded 10x initial at step " +
                                std::to_string(step));
            }
            result.report.curve.push_back({step / std::max<std::size_t>(pool.size(), 1),
                                           entry.chunk->section->doc_id,
                                           entry.chunk->section->index, step, loss});

            if (on_coeffs) {
                std::fill(coeff_grad.begin(), coeff_grad.end(), 0.0);
                detail::accumulate_coeff_grads(result.compressed, grads, coeff_grad);
                for (std::size_t i = 0; i < n_coeffs; ++i) {
                    coeff_step[i] = cfg.step_size * coeff_grad[i];
                }
                detail::apply_coeff_step(result.compressed, coeff_step);
                result.model = build_model(result.compressed);
            } else {
                for (auto& [name, m] : result.model.params) {
                    axpy_in_place(m, -cfg.step_size, grads.at(name));
                }
            }
        }
    }

    if (result.report.has_probe) {
        result.report.post_probe_perplexity = forgetting_probe(result.model, probe_corpus);
    }
    if (result.report.has_holdout) {
        result.report.post_holdout_answer_loss =
            mean_answer_loss(result.model, sections, holdout_qa);
    }
    return result;
}

}  // namespace qtlc
