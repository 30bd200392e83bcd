#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qtlc/compressed_model.hpp"
#include "qtlc/curriculum.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/matrix.hpp"
#include "qtlc/rng.hpp"
#include "qtlc/toy_model.hpp"

using namespace qtlc;

namespace {

ToyConfig tiny_config() {
    ToyConfig cfg;
    cfg.n_layers = 1;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.d_ff = 24;
    cfg.vocab = 256;
    cfg.max_seq = 48;
    cfg.seed = 5;
    return cfg;
}

TileCatalog small_catalog() {
    TileCatalog c;
    c.shapes.push_back({4, 4, 2});
    c.shapes.push_back({3, 3, 2});
    return c;
}

std::string write_temp_file(const std::string& stem, const std::string& content) {
    const std::string path =
        (std::filesystem::temp_directory_path() / ("qtlc_test_" + stem)).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    return path;
}

Section make_section(const std::string& doc, std::size_t index, const std::string& body) {
    Section s;
    s.doc_id = doc;
    s.index = index;
    s.title = "T" + std::to_string(index);
    s.body = body;
    return s;
}

QAPair make_qa(const std::string& doc, std::size_t index, const std::string& q,
               const std::string& a) {
    QAPair qa;
    qa.doc_id = doc;
    qa.section_index = index;
    qa.question = q;
    qa.answer = a;
    return qa;
}

}  // namespace

TEST_CASE("segment_document splits at headings") {
    SECTION("no headings gives a single untitled section") {
        const auto sections = segment_document("just a paragraph\nand another line", "d");
        REQUIRE(sections.size() == 1);
        REQUIRE(sections[0].title.empty());
        REQUIRE(sections[0].index == 0);
        REQUIRE(sections[0].body == "just a paragraph\nand another line");
        REQUIRE(sections[0].doc_id == "d");
    }

    SECTION("hash headings title their sections") {
        const auto sections = segment_document("# A\nx\n# B\ny", "d");
        REQUIRE(sections.size() == 2);
        REQUIRE(sections[0].title == "A");
        REQUIRE(sections[0].body == "x");
        REQUIRE(sections[1].title == "B");
        REQUIRE(sections[1].body == "y");
        REQUIRE(sections[0].index == 0);
        REQUIRE(sections[1].index == 1);
    }

    SECTION("preamble before the first heading becomes section 0") {
        const auto sections = segment_document("intro text\n# H\nbody", "d");
        REQUIRE(sections.size() == 2);
        REQUIRE(sections[0].title.empty());
        REQUIRE(sections[0].body == "intro text");
        REQUIRE(sections[1].title == "H");
    }

    SECTION("empty-bodied headings are dropped and indices stay contiguous") {
        const auto sections = segment_document("# A\n\n# B\ncontent\n# C\nmore", "d");
        REQUIRE(sections.size() == 2);
        REQUIRE(sections[0].title == "B");
        REQUIRE(sections[0].index == 0);
        REQUIRE(sections[1].title == "C");
        REQUIRE(sections[1].index == 1);
    }

    SECTION("deep hash headings strip every marker") {
        const auto sections = segment_document("### Deep Title\nbody", "d");
        REQUIRE(sections.size() == 1);
        REQUIRE(sections[0].title == "Deep Title");
    }

    SECTION("ALL-CAPS line followed by a blank line is a heading") {
        const auto sections = segment_document("FIRING SCHEDULE\n\nramp slowly", "d");
        REQUIRE(sections.size() == 1);
        REQUIRE(sections[0].title == "FIRING SCHEDULE");
        REQUIRE(sections[0].body == "ramp slowly");
    }

    SECTION("ALL-CAPS line without a blank line stays in the body") {
        const auto sections = segment_document("NOT A HEADING\nbecause no blank", "d");
        REQUIRE(sections.size() == 1);
        REQUIRE(sections[0].title.empty());
        REQUIRE(sections[0].body.find("NOT A HEADING") != std::string::npos);
    }

    SECTION("long ALL-CAPS lines are body text") {
        const std::string caps9 = "ONE TWO THREE FOUR FIVE SIX SEVEN EIGHT NINE";
        const auto sections = segment_document(caps9 + "\n\ntail", "d");
        REQUIRE(sections.size() == 1);
        REQUIRE(sections[0].title.empty());
    }

    SECTION("carriage returns are tolerated") {
        const auto sections = segment_document("# A\r\nx\r\n", "d");
        REQUIRE(sections.size() == 1);
        REQUIRE(sections[0].title == "A");
        REQUIRE(sections[0].body == "x");
    }

    SECTION("empty document is an error") {
        try {
            segment_document("   \n \n", "d");
            FAIL("expected data error");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::data_error);
        }
    }
}

TEST_CASE("load_qa_dataset parses the fixture to the hand manifest") {
    const auto pairs = load_qa_dataset("fixtures/qa_small.jsonl");
    REQUIRE(pairs.size() == 5);

    REQUIRE(pairs[0].doc_id == "orchard");
    REQUIRE(pairs[0].section_index == 0);
    REQUIRE(pairs[0].question == "When are the rows pruned?");
    REQUIRE(pairs[0].answer == "in the last week of February");
    REQUIRE_FALSE(pairs[0].rationale.has_value());

    REQUIRE(pairs[1].doc_id == "orchard");
    REQUIRE(pairs[1].section_index == 1);
    REQUIRE(pairs[1].rationale.has_value());
    REQUIRE(*pairs[1].rationale ==
            "Quince tolerates standing water better than seedling stock.");

    REQUIRE(pairs[2].doc_id == "kiln");
    REQUIRE(pairs[3].doc_id == "kiln");
    REQUIRE(pairs[3].answer == "cone ten flat");
    REQUIRE(pairs[4].doc_id == "survey");
    REQUIRE(pairs[4].section_index == 2);
}

TEST_CASE("load_qa_dataset enforces schema and caps") {
    SECTION("empty file gives an empty sequence") {
        const std::string path = write_temp_file("empty.jsonl", "");
        REQUIRE(load_qa_dataset(path).empty());
    }

    SECTION("per-section cap keeps the first entries") {
        std::string content;
        for (int i = 0; i < 7; ++i) {
            content += "{\"doc_id\": \"d\", \"section_index\": 0, \"question\": \"q" +
                       std::to_string(i) + "\", \"answer\": \"a" + std::to_string(i) +
                       "\"}\n";
        }
        const std::string path = write_temp_file("cap.jsonl", content);
        const auto pairs = load_qa_dataset(path, 5);
        REQUIRE(pairs.size() == 5);
        for (int i = 0; i < 5; ++i) {
            REQUIRE(pairs[static_cast<std::size_t>(i)].question == "q" + std::to_string(i));
        }
    }

    SECTION("malformed json names the line") {
        const std::string path = write_temp_file(
            "bad.jsonl",
            "{\"doc_id\": \"d\", \"section_index\": 0, \"question\": \"q\", \"answer\": \"a\"}\n"
            "{not json\n");
        try {
            load_qa_dataset(path);
            FAIL("expected parse error");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::parse_error);
            REQUIRE(std::string(e.message()).find("line 2") != std::string::npos);
        }
    }

    SECTION("unknown keys are rejected") {
        const std::string path = write_temp_file(
            "unknown.jsonl",
            "{\"doc_id\": \"d\", \"section_index\": 0, \"question\": \"q\", "
            "\"answer\": \"a\", \"difficulty\": 3}\n");
        REQUIRE_THROWS_AS(load_qa_dataset(path), Error);
    }

    SECTION("negative section index is rejected") {
        const std::string path = write_temp_file(
            "negidx.jsonl",
            "{\"doc_id\": \"d\", \"section_index\": -1, \"question\": \"q\", \"answer\": \"a\"}\n");
        REQUIRE_THROWS_AS(load_qa_dataset(path), Error);
    }

    SECTION("empty answers are rejected") {
        const std::string path = write_temp_file(
            "emptyans.jsonl",
            "{\"doc_id\": \"d\", \"section_index\": 0, \"question\": \"q\", \"answer\": \"\"}\n");
        REQUIRE_THROWS_AS(load_qa_dataset(path), Error);
    }

    SECTION("dangling references are caught when sections are supplied") {
        const std::vector<Section> sections = {make_section("d", 0, "body")};
        const std::string path = write_temp_file(
            "dangling.jsonl",
            "{\"doc_id\": \"d\", \"section_index\": 3, \"question\": \"q\", \"answer\": \"a\"}\n");
        try {
            load_qa_dataset(path, 5, &sections);
            FAIL("expected reference error");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::reference_error);
        }
    }

    SECTION("missing file is an io error") {
        try {
            load_qa_dataset("fixtures/does_not_exist.jsonl");
            FAIL("expected io error");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::io_error);
        }
    }
}

TEST_CASE("training examples carry shifted targets and span masks") {
    SECTION("mask covers exactly the answer bytes") {
        const Section s = make_section("d", 0, "xy");
        const QAPair qa = make_qa("d", 0, "q?", "AB");
        // text = "xy\n\nQ: q?\nA: AB", answer bytes at positions 13..14
        const TrainingExample ex = build_training_example(s, qa, 64);
        REQUIRE(ex.tokens.size() == 15);
        for (std::size_t t = 0; t + 1 < ex.tokens.size(); ++t) {
            REQUIRE(ex.targets[t] == ex.tokens[t + 1]);
        }
        std::vector<std::size_t> on;
        for (std::size_t t = 0; t < ex.mask.size(); ++t) {
            if (ex.mask[t]) on.push_back(t);
        }
        REQUIRE(on == std::vector<std::size_t>{12, 13});
        REQUIRE(ex.tokens[13] == 'A');
        REQUIRE(ex.tokens[14] == 'B');
    }

    SECTION("rationales join the loss span") {
        const Section s = make_section("d", 0, "xy");
        QAPair qa = make_qa("d", 0, "q?", "AB");
        qa.rationale = "rr";
        // text = "xy\n\nQ: q?\nR: rr\nA: AB"
        const TrainingExample ex = build_training_example(s, qa, 64);
        std::size_t masked = 0;
        for (std::size_t t = 0; t < ex.mask.size(); ++t) {
            if (ex.mask[t]) ++masked;
        }
        REQUIRE(masked == 4);  // two rationale bytes + two answer bytes
    }

    SECTION("left truncation keeps the whole answer") {
        const Section s = make_section("d", 0, std::string(200, 'x'));
        const QAPair qa = make_qa("d", 0, "where?", "ANSWER");
        const TrainingExample ex = build_training_example(s, qa, 32);
        REQUIRE(ex.tokens.size() == 32);
        std::string tail;
        for (std::size_t t = ex.tokens.size() - 6; t < ex.tokens.size(); ++t) {
            tail += static_cast<char>(ex.tokens[t]);
        }
        REQUIRE(tail == "ANSWER");
        bool any_mask = false;
        for (std::uint8_t m : ex.mask) any_mask |= (m != 0);
        REQUIRE(any_mask);
    }
}

TEST_CASE("loss ignores targets outside the mask") {
    const ToyModel model = init_toy_model(tiny_config());
    const Section s = make_section("d", 0, "the kiln door faces the creek");
    const QAPair qa = make_qa("d", 0, "which way?", "toward the creek");
    TrainingExample ex = build_training_example(s, qa, 48);

    const auto [loss_a, grads_a] =
        backward(model, ex.tokens, LossSpec::cross_entropy(ex.targets, ex.mask));

    TrainingExample scrambled = ex;
    for (std::size_t t = 0; t < scrambled.mask.size(); ++t) {
        if (!scrambled.mask[t]) scrambled.targets[t] = (scrambled.targets[t] + 91) % 256;
    }
    const auto [loss_b, grads_b] =
        backward(model, scrambled.tokens, LossSpec::cross_entropy(scrambled.targets, scrambled.mask));

    REQUIRE(loss_a == loss_b);
    for (const auto& [name, g] : grads_a) {
        REQUIRE(g.values == grads_b.at(name).values);
    }
}

TEST_CASE("forgetting probe behaves like a perplexity") {
    const ToyModel model = init_toy_model(tiny_config());

    SECTION("deterministic") {
        SeededRng rng(31);
        std::vector<std::int32_t> probe(512);
        for (auto& t : probe) t = static_cast<std::int32_t>(rng.next_below(256));
        const double a = forgetting_probe(model, probe);
        const double b = forgetting_probe(model, probe);
        REQUIRE(a == b);
    }

    SECTION("untrained model sits near vocab-scale perplexity") {
        ToyConfig cfg;  // default: vocab 256
        const ToyModel untrained = init_toy_model(cfg);
        SeededRng rng(900);
        std::vector<std::int32_t> probe(4096);
        for (auto& t : probe) t = static_cast<std::int32_t>(rng.next_below(256));
        const double ppl = forgetting_probe(untrained, probe);
        // random logits push perplexity somewhat above the uniform value 256
        REQUIRE(ppl >= 200.0);
        REQUIRE(ppl <= 520.0);
    }

    SECTION("memorized repetition drives perplexity below 2") {
        ToyConfig cfg = tiny_config();
        cfg.max_seq = 16;
        ToyModel trained = init_toy_model(cfg);
        const std::vector<std::int32_t> window(16, 65);
        const std::vector<std::int32_t> targets(window.begin(), window.end());
        for (int step = 0; step < 120; ++step) {
            auto [loss, grads] =
                backward(trained, window, LossSpec::cross_entropy(targets));
            (void)loss;
            for (auto& [name, m] : trained.params) {
                axpy_in_place(m, -0.05, grads.at(name));
            }
        }
        const std::vector<std::int32_t> probe(256, 65);
        REQUIRE(forgetting_probe(trained, probe) < 2.0);
    }

    SECTION("empty probe is an error") {
        try {
            forgetting_probe(model, {});
            FAIL("expected data error");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::data_error);
        }
    }
}

TEST_CASE("mean answer loss matches a direct recomputation") {
    const ToyModel model = init_toy_model(tiny_config());
    const std::vector<Section> sections = {make_section("d", 0, "granite under the shed")};
    const std::vector<QAPair> qa = {make_qa("d", 0, "what is under it?", "granite")};

    const TrainingExample ex = build_training_example(sections[0], qa[0], 48);
    const auto [direct, grads] =
        backward(model, ex.tokens, LossSpec::cross_entropy(ex.targets, ex.mask));
    (void)grads;
    REQUIRE(mean_answer_loss(model, sections, qa) == direct);

    REQUIRE_THROWS_AS(mean_answer_loss(model, sections, {}), Error);
    const std::vector<QAPair> dangling = {make_qa("other", 0, "q", "a")};
    try {
        mean_answer_loss(model, sections, dangling);
        FAIL("expected reference error");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::reference_error);
    }
}

TEST_CASE("sectionwise finetune walks chunks in curriculum order") {
    const ToyModel model = init_toy_model(tiny_config());
    const CompressedModel cm =
        compress_model(model, LayoutKind::quasiperiodic, small_catalog(),
                       RankPolicy::energy(0.95), TruncationPolicy::energy(0.9));

    const std::vector<Section> sections = {
        make_section("alpha", 0, "first body"),
        make_section("alpha", 1, "second body"),
        make_section("beta", 0, "third body"),
    };
    const std::vector<QAPair> qa = {
        make_qa("alpha", 0, "q1?", "a1"),
        make_qa("beta", 0, "q3?", "a3"),
        // alpha section 1 has no pairs and must be skipped
    };

    CurriculumConfig cfg;
    cfg.steps_per_chunk = 2;
    cfg.epochs = 2;
    cfg.step_size = 1e-3;
    cfg.seed = 9;

    const FinetuneResult result = finetune_sectionwise(model, cm, sections, qa, cfg);

    REQUIRE(result.report.chunks.size() == 6);  // 3 sections x 2 epochs
    const auto& chunks = result.report.chunks;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        REQUIRE(chunks[i].epoch == i / 3);
        REQUIRE(chunks[i].doc_id == sections[i % 3].doc_id);
        REQUIRE(chunks[i].section_index == sections[i % 3].index);
    }
    REQUIRE(chunks[0].skipped == false);
    REQUIRE(chunks[1].skipped == true);
    REQUIRE(chunks[1].example_count == 0);
    REQUIRE(chunks[2].skipped == false);

    // curve: 2 epochs x 2 trained chunks x 2 steps
    REQUIRE(result.report.curve.size() == 8);
    for (const CurvePoint& pt : result.report.curve) {
        REQUIRE(std::isfinite(pt.loss));
        REQUIRE(pt.doc_id != "alpha1");
    }
    for (std::size_t i = 1; i < result.report.curve.size(); ++i) {
        const CurvePoint& prev = result.report.curve[i - 1];
        const CurvePoint& next = result.report.curve[i];
        const bool ordered =
            std::tie(prev.epoch, prev.doc_id, prev.section_index, prev.step) <
            std::tie(next.epoch, next.doc_id, next.section_index, next.step) ||
            (prev.doc_id == "beta" && next.doc_id == "alpha" && next.epoch > prev.epoch);
        REQUIRE(ordered);
    }
}

TEST_CASE("zero steps per chunk leaves the model untouched") {
    const ToyModel model = init_toy_model(tiny_config());
    const CompressedModel cm =
        compress_model(model, LayoutKind::quasiperiodic, small_catalog(),
                       RankPolicy::energy(0.95), TruncationPolicy::energy(0.9));
    const std::vector<Section> sections = {make_section("d", 0, "body text")};
    const std::vector<QAPair> qa = {make_qa("d", 0, "q?", "a")};

    CurriculumConfig cfg;
    cfg.steps_per_chunk = 0;

    const FinetuneResult result = finetune_sectionwise(model, cm, sections, qa, cfg);
    REQUIRE(result.report.chunks.size() == 1);
    REQUIRE(result.report.curve.empty());

    const ToyModel baseline = build_model(cm);
    for (const auto& [name, m] : baseline.params) {
        REQUIRE(result.model.params.at(name).values == m.values);
    }
}

TEST_CASE("coefficient finetuning keeps retained indices frozen") {
    const ToyModel model = init_toy_model(tiny_config());
    const CompressedModel cm =
        compress_model(model, LayoutKind::quasiperiodic, small_catalog(),
                       RankPolicy::energy(0.95), TruncationPolicy::energy(0.85));
    const std::vector<Section> sections = {make_section("d", 0, "the flue damper sticks")};
    const std::vector<QAPair> qa = {make_qa("d", 0, "what sticks?", "the damper")};

    CurriculumConfig cfg;
    cfg.steps_per_chunk = 3;
    cfg.step_size = 1e-2;
    cfg.trainables = CurriculumConfig::Trainables::coefficients;

    const FinetuneResult result = finetune_sectionwise(model, cm, sections, qa, cfg);

    bool any_value_changed = false;
    for (const auto& [name, layer] : cm.layers) {
        const CompressedLayer& after = result.compressed.layers.at(name);
        REQUIRE(after.spectral_blocks.size() == layer.spectral_blocks.size());
        for (std::size_t b = 0; b < layer.spectral_blocks.size(); ++b) {
            const auto& before_c = layer.spectral_blocks[b].coeffs;
            const auto& after_c = after.spectral_blocks[b].coeffs;
            REQUIRE(before_c.size() == after_c.size());
            for (std::size_t i = 0; i < before_c.size(); ++i) {
                REQUIRE(before_c[i].row == after_c[i].row);
                REQUIRE(before_c[i].col == after_c[i].col);
                if (before_c[i].value != after_c[i].value) any_value_changed = true;
            }
        }
    }
    REQUIRE(any_value_changed);

    // the returned model is exactly the decompression of the returned set
    const ToyModel rebuilt = build_model(result.compressed);
    for (const auto& [name, m] : rebuilt.params) {
        REQUIRE(result.model.params.at(name).values == m.values);
    }
}

TEST_CASE("dense finetuning memorizes a single pair at desk scale") {
    const ToyModel model = init_toy_model(tiny_config());
    const CompressedModel cm =
        compress_model(model, LayoutKind::quasiperiodic, small_catalog(),
                       RankPolicy::energy(0.95), TruncationPolicy::energy(0.9));
    const std::vector<Section> sections = {
        make_section("memo", 0, "The dial sits on the north sill.")};
    const std::vector<QAPair> qa = {
        make_qa("memo", 0, "What does the dial read?", "forty degrees")};

    CurriculumConfig cfg;
    cfg.steps_per_chunk = 50;
    cfg.step_size = 0.1;
    cfg.seed = 3;
    cfg.trainables = CurriculumConfig::Trainables::all_matrices;

    const FinetuneResult result =
        finetune_sectionwise(model, cm, sections, qa, cfg, {}, qa);
    REQUIRE(result.report.has_holdout);
    REQUIRE(result.report.post_holdout_answer_loss <=
            0.3 * result.report.pre_holdout_answer_loss);
}

TEST_CASE("one-pass finetuning is deterministic and shares the report schema") {
    const ToyModel model = init_toy_model(tiny_config());
    const CompressedModel cm =
        compress_model(model, LayoutKind::quasiperiodic, small_catalog(),
                       RankPolicy::energy(0.95), TruncationPolicy::energy(0.9));
    const std::vector<Section> sections = {
        make_section("alpha", 0, "first body"),
        make_section("beta", 0, "second body"),
    };
    const std::vector<QAPair> qa = {
        make_qa("alpha", 0, "q1?", "a1"),
        make_qa("alpha", 0, "q2?", "a2"),
        make_qa("beta", 0, "q3?", "a3"),
    };

    CurriculumConfig cfg;
    cfg.steps_per_chunk = 2;
    cfg.step_size = 1e-3;
    cfg.seed = 11;

    const FinetuneResult a = finetune_onepass(model, cm, sections, qa, cfg);
    const FinetuneResult b = finetune_onepass(model, cm, sections, qa, cfg);

    REQUIRE(a.report.chunks.size() == 2);
    REQUIRE(a.report.curve.size() == 4);  // 2 chunks x 2 steps budget
    REQUIRE(a.report.curve.size() == b.report.curve.size());
    for (std::size_t i = 0; i < a.report.curve.size(); ++i) {
        REQUIRE(a.report.curve[i].loss == b.report.curve[i].loss);
        REQUIRE(a.report.curve[i].doc_id == b.report.curve[i].doc_id);
    }
    for (const auto& [name, m] : a.model.params) {
        REQUIRE(m.values == b.model.params.at(name).values);
    }

    bool any_seed_reorders = false;
    for (std::uint64_t seed = 12; seed < 20 && !any_seed_reorders; ++seed) {
        CurriculumConfig other = cfg;
        other.seed = seed;
        const FinetuneResult c = finetune_onepass(model, cm, sections, qa, other);
        for (std::size_t i = 0; i < a.report.curve.size(); ++i) {
            if (a.report.curve[i].loss != c.report.curve[i].loss) any_seed_reorders = true;
        }
    }
    REQUIRE(any_seed_reorders);
}

TEST_CASE("conflicting chunks at a runaway step size trip the divergence guard") {
    const ToyModel model = init_toy_model(tiny_config());
    const CompressedModel cm =
        compress_model(model, LayoutKind::quasiperiodic, small_catalog(),
                       RankPolicy::energy(0.95), TruncationPolicy::energy(0.9));
    // identical contexts with contradictory answers: aggressively fitting one
    // chunk makes the other's loss explode
    const std::vector<Section> sections = {make_section("a", 0, "same context"),
                                           make_section("b", 0, "same context")};
    const std::vector<QAPair> qa = {make_qa("a", 0, "which?", "xxxx"),
                                    make_qa("b", 0, "which?", "yyyy")};

    CurriculumConfig cfg;
    cfg.steps_per_chunk = 20;
    cfg.epochs = 2;
    cfg.step_size = 5.0;
    cfg.trainables = CurriculumConfig::Trainables::all_matrices;

    try {
        finetune_sectionwise(model, cm, sections, qa, cfg);
        FAIL("expected divergence error");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::divergence_error);
    }
}

TEST_CASE("curriculum config validation") {
    CurriculumConfig cfg;
    REQUIRE_NOTHROW(validate_curriculum_config(cfg));
    cfg.epochs = 0;
    REQUIRE_THROWS_AS(validate_curriculum_config(cfg), Error);
    cfg = CurriculumConfig{};
    cfg.questions_per_section_cap = 0;
    REQUIRE_THROWS_AS(validate_curriculum_config(cfg), Error);
    cfg = CurriculumConfig{};
    cfg.step_size = 0.0;
    REQUIRE_THROWS_AS(validate_curriculum_config(cfg), Error);
}
