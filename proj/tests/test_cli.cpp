#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"

#include "qtlc/checkpoint.hpp"
#include "qtlc/compressed_model.hpp"
#include "qtlc/config.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/toy_model.hpp"
#include "schema_check.hpp"

using namespace qtlc;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
    nlohmann::json json;
    bool json_ok = false;
};

std::string scratch_dir() {
    static const std::string dir = [] {
        const std::filesystem::path p =
            std::filesystem::temp_directory_path() / "qtlc_cli_scratch";
        std::filesystem::remove_all(p);
        std::filesystem::create_directories(p);
        return p.string();
    }();
    return dir;
}

std::string scratch(const std::string& name) { return scratch_dir() + "/" + name; }

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += "'";
    return out;
}

RunResult run_cli(const std::vector<std::string>& args) {
    const char* bin = std::getenv("QTLC_BIN");
    REQUIRE(bin != nullptr);
    static int call_id = 0;
    const std::string err_path = scratch("stderr_" + std::to_string(call_id++) + ".txt");

    std::string cmd = shell_quote(bin);
    for (const std::string& a : args) {
        cmd += ' ';
        cmd += shell_quote(a);
    }
    cmd += " 2>" + shell_quote(err_path);

    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

    std::ifstream err_in(err_path, std::ios::binary);
    r.err.assign(std::istreambuf_iterator<char>(err_in), std::istreambuf_iterator<char>());

    if (!r.out.empty()) {
        try {
            r.json = nlohmann::json::parse(r.out);
            r.json_ok = true;
        } catch (const nlohmann::json::exception&) {
            r.json_ok = false;
        }
    }
    return r;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    const std::string text = read_file(path);
    return std::vector<std::uint8_t>(text.begin(), text.end());
}

nlohmann::json tiny_model_json() {
    return {{"n_layers", 1}, {"d_model", 4}, {"n_heads", 2}, {"d_ff", 6},
            {"vocab", 256},  {"max_seq", 8}, {"seed", 5}};
}

ToyConfig tiny_model_config() {
    ToyConfig cfg;
    cfg.n_layers = 1;
    cfg.d_model = 4;
    cfg.n_heads = 2;
    cfg.d_ff = 6;
    cfg.vocab = 256;
    cfg.max_seq = 8;
    cfg.seed = 5;
    return cfg;
}

std::string write_config(const std::string& name, const nlohmann::json& j) {
    const std::string path = scratch(name);
    write_file(path, j.dump(2) + "\n");
    return path;
}

nlohmann::json load_schema(const std::string& name) {
    return schema_check::load_json_file("../docs/schemas/" + name);
}

bool equal_except_timestamp(const std::vector<std::uint8_t>& a,
                            const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i >= kTimestampOffset && i < kTimestampOffset + kTimestampSize) continue;
        if (a[i] != b[i]) return false;
    }
    return true;
}

const char* kCorpusText =
    "The intake screen is brushed clear before the sluice gate opens. Silt "
    "builds against the west pier after any storm, so the depth markers are "
    "read twice and the winch pawl is seated before lifting.";

// compress a tiny model and return the checkpoint path
std::string make_checkpoint(const std::string& tag) {
    const std::string cfg_path =
        write_config("mk_" + tag + ".json", {{"model", tiny_model_json()}});
    const std::string out = scratch(tag + ".qtlc");
    const RunResult r = run_cli({"compress", "--config", cfg_path, "--out", out, "--quiet"});
    REQUIRE(r.exit_code == 0);
    return out;
}

}  // namespace

TEST_CASE("compress writes a checkpoint and schema-valid stats") {
    const std::string cfg_path = write_config("compress.json", {{"model", tiny_model_json()}});
    const std::string out = scratch("compress.qtlc");
    const RunResult r = run_cli({"compress", "--config", cfg_path, "--out", out});

    REQUIRE(r.exit_code == 0);
    REQUIRE(r.json_ok);
    REQUIRE(r.json["report_type"] == "stats");
    REQUIRE(r.json["output_path"] == out);
    REQUIRE(schema_check::validate_json(load_schema("stats_report.schema.json"), r.json)
                .empty());
    REQUIRE(std::filesystem::exists(out));

    // the file matches the in-library pipeline bit for bit
    const CheckpointData written = read_checkpoint(out);
    const ToyModel model = init_toy_model(tiny_model_config());
    const CompressedModel direct =
        compress_model(model, LayoutKind::quasiperiodic, default_tile_catalog(),
                       RankPolicy::energy(), TruncationPolicy::threshold(0.0));
    REQUIRE(serialize_checkpoint(written.model, 0) == serialize_checkpoint(direct, 0));
}

TEST_CASE("decompress expands the checkpoint to dense tensors") {
    const std::string ckpt = make_checkpoint("dec_src");
    const std::string out = scratch("dec_dense.qtlc");
    const RunResult r = run_cli({"decompress", "--checkpoint", ckpt, "--out", out});

    REQUIRE(r.exit_code == 0);
    REQUIRE(r.json_ok);
    REQUIRE(r.json["report_type"] == "decompress");
    REQUIRE(r.json["decompressed_layers"].size() == 6);
    REQUIRE(schema_check::validate_json(load_schema("decompress_report.schema.json"), r.json)
                .empty());

    const CheckpointData dense = read_checkpoint(out);
    REQUIRE(dense.model.layers.empty());
    const ToyModel rebuilt = build_model(read_checkpoint(ckpt).model);
    REQUIRE(r.json["parameter_count"] == model_param_count(rebuilt));
    REQUIRE(dense.model.dense.size() == rebuilt.params.size());
    for (const auto& [name, m] : rebuilt.params) {
        REQUIRE(dense.model.dense.at(name).values == m.values);
    }
}

TEST_CASE("align with zero steps rewrites the checkpoint bit for bit") {
    const std::string ckpt = make_checkpoint("align_src");
    const std::string corpus = scratch("align_corpus.txt");
    write_file(corpus, kCorpusText);
    const std::string out = scratch("aligned.qtlc");
    const std::string cfg_path = write_config(
        "align.json",
        {{"model", tiny_model_json()},
         {"align", {{"steps", 0}, {"batch_tokens", 64}}},
         {"paths", {{"corpus", corpus}, {"checkpoint", ckpt}, {"out", out}}}});

    const RunResult r = run_cli({"align", "--config", cfg_path});
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.json_ok);
    REQUIRE(r.json["report_type"] == "align");
    REQUIRE(schema_check::validate_json(load_schema("align_report.schema.json"), r.json)
                .empty());
    REQUIRE(r.err.find("aligning") != std::string::npos);

    REQUIRE(equal_except_timestamp(read_bytes(ckpt), read_bytes(out)));

    // report side files land next to the checkpoint and match their schemas
    const nlohmann::json file_report = nlohmann::json::parse(read_file(out + ".align.json"));
    REQUIRE(schema_check::validate_json(load_schema("align_report.schema.json"), file_report)
                .empty());
    REQUIRE_FALSE(file_report.contains("output_path"));
    REQUIRE(schema_check::validate_csv(load_schema("align_curve.csv.schema.json"),
                                       read_file(out + ".align.csv"))
                .empty());

    const RunResult quiet = run_cli({"align", "--config", cfg_path, "--quiet"});
    REQUIRE(quiet.exit_code == 0);
    REQUIRE(quiet.err.empty());
}

TEST_CASE("eval reports near-zero divergence on a lossless checkpoint") {
    // full rank plus a zero threshold keeps every coefficient
    const std::string lossless_cfg = write_config(
        "eval_lossless.json",
        {{"model", tiny_model_json()}, {"rank_policy", {{"mode", "fixed"}, {"r", 64}}}});
    const std::string ckpt = scratch("eval_src.qtlc");
    const RunResult compressed =
        run_cli({"compress", "--config", lossless_cfg, "--out", ckpt, "--quiet"});
    REQUIRE(compressed.exit_code == 0);

    const std::string corpus = scratch("eval_corpus.txt");
    write_file(corpus, kCorpusText);
    const std::string cfg_path = write_config(
        "eval.json", {{"model", tiny_model_json()},
                      {"paths", {{"corpus", corpus}, {"checkpoint", ckpt}, {"probe", corpus}}}});

    const RunResult r = run_cli({"eval", "--config", cfg_path});
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.json_ok);
    REQUIRE(r.json["report_type"] == "eval");
    REQUIRE(schema_check::validate_json(load_schema("eval_report.schema.json"), r.json)
                .empty());
    REQUIRE(r.json["per_layer_kl"].size() == 1);
    for (const nlohmann::json& kl : r.json["per_layer_kl"]) {
        REQUIRE(kl.get<double>() <= 1e-8);
    }
    REQUIRE(r.json["probe"]["available"] == true);
    REQUIRE(r.json["probe"]["perplexity"].get<double>() > 0.0);
    REQUIRE(r.json["parameter_counts"]["original"] ==
            model_param_count(init_toy_model(tiny_model_config())));
}

TEST_CASE("stats round trips the compress-time report") {
    const std::string cfg_path = write_config("stats.json", {{"model", tiny_model_json()}});
    const std::string out = scratch("stats.qtlc");
    const RunResult compressed =
        run_cli({"compress", "--config", cfg_path, "--out", out, "--quiet"});
    REQUIRE(compressed.exit_code == 0);

    const RunResult r = run_cli({"stats", "--checkpoint", out});
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.json_ok);
    REQUIRE(schema_check::validate_json(load_schema("stats_report.schema.json"), r.json)
                .empty());

    nlohmann::json expect = compressed.json;
    expect.erase("output_path");
    REQUIRE(r.json == expect);
}

TEST_CASE("usage and config mistakes exit with code 2") {
    const nlohmann::json error_schema = load_schema("error_report.schema.json");

    SECTION("compress without --config") {
        const RunResult r = run_cli({"compress"});
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.json_ok);
        REQUIRE(r.json["error"]["code"] == "config_error");
        REQUIRE(schema_check::validate_json(error_schema, r.json).empty());
        REQUIRE(r.err.find("error:") != std::string::npos);
    }
    SECTION("config file that is not JSON") {
        const std::string path = scratch("broken.json");
        write_file(path, "{nope");
        const RunResult r = run_cli({"compress", "--config", path});
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.json["error"]["code"] == "config_error");
    }
    SECTION("unknown key in the config root") {
        const std::string path = write_config("typo.json", {{"modle", tiny_model_json()}});
        const RunResult r = run_cli({"compress", "--config", path});
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.json["error"]["message"].get<std::string>().find("modle") !=
                std::string::npos);
    }
    SECTION("align without a corpus path") {
        const std::string ckpt = make_checkpoint("cfg_err");
        const std::string path = write_config(
            "nocorpus.json",
            {{"model", tiny_model_json()}, {"paths", {{"checkpoint", ckpt}}}});
        const RunResult r = run_cli({"align", "--config", path});
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.json["error"]["code"] == "config_error");
    }
    SECTION("decompress without a checkpoint") {
        const RunResult r = run_cli({"decompress"});
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.json["error"]["code"] == "config_error");
    }
    SECTION("unknown subcommand") {
        const RunResult r = run_cli({"frobnicate"});
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.out.empty());
    }
    SECTION("--help stays off stdout") {
        const RunResult r = run_cli({"--help"});
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.out.empty());
        REQUIRE(r.err.find("Usage") != std::string::npos);
    }
    SECTION("quiet errors stay off stderr") {
        const RunResult r = run_cli({"compress", "--quiet"});
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.err.empty());
        REQUIRE(r.json_ok);
    }
}

TEST_CASE("missing files exit with code 3") {
    SECTION("unwritable output path") {
        const std::string cfg_path =
            write_config("io_out.json", {{"model", tiny_model_json()}});
        const RunResult r = run_cli({"compress", "--config", cfg_path, "--out",
                                     "/nonexistent_dir_for_qtlc/m.qtlc"});
        REQUIRE(r.exit_code == 3);
        REQUIRE(r.json["error"]["code"] == "io_error");
    }
    SECTION("missing checkpoint") {
        const RunResult r = run_cli({"stats", "--checkpoint", scratch("absent.qtlc")});
        REQUIRE(r.exit_code == 3);
        REQUIRE(r.json["error"]["code"] == "io_error");
    }
    SECTION("missing corpus") {
        const std::string ckpt = make_checkpoint("io_corpus");
        const std::string cfg_path = write_config(
            "io_corpus.json",
            {{"model", tiny_model_json()},
             {"paths",
              {{"corpus", scratch("absent corpus.txt")}, {"checkpoint", ckpt}}}});
        const RunResult r = run_cli({"align", "--config", cfg_path});
        REQUIRE(r.exit_code == 3);
        REQUIRE(r.json["error"]["code"] == "io_error");
    }
}

TEST_CASE("corruption exits with code 4") {
    const std::string ckpt = make_checkpoint("corrupt");
    std::vector<std::uint8_t> bytes = read_bytes(ckpt);
    bytes[100] ^= 0x40;
    write_file(ckpt, std::string(bytes.begin(), bytes.end()));

    const RunResult r = run_cli({"stats", "--checkpoint", ckpt});
    REQUIRE(r.exit_code == 4);
    REQUIRE(r.json_ok);
    REQUIRE(r.json["error"]["code"] == "checksum_error");
    REQUIRE(schema_check::validate_json(load_schema("error_report.schema.json"), r.json)
                .empty());
}

TEST_CASE("version mismatch exits with code 5") {
    const std::string ckpt = make_checkpoint("version");
    std::vector<std::uint8_t> bytes = read_bytes(ckpt);
    bytes[4] = 9;
    bytes[5] = 0;
    const std::size_t body = bytes.size() - 8;
    const std::uint64_t digest =
        detail::fnv1a64(bytes.data(), body, kTimestampOffset, kTimestampSize);
    for (int i = 0; i < 8; ++i) {
        bytes[body + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(digest >> (8 * i));
    }
    write_file(ckpt, std::string(bytes.begin(), bytes.end()));

    const RunResult r = run_cli({"stats", "--checkpoint", ckpt});
    REQUIRE(r.exit_code == 5);
    REQUIRE(r.json["error"]["code"] == "format_version_error");
}

TEST_CASE("module errors exit with code 6") {
    const std::string ckpt = make_checkpoint("mod_err");
    const std::string doc = scratch("mod_err_doc.txt");
    write_file(doc, "The relief valve sticks in cold weather and is tapped twice.\n");
    const std::string qa = scratch("mod_err_qa.jsonl");
    write_file(qa,
               "{\"doc_id\": \"mod_err_doc\", \"section_index\": 7, "
               "\"question\": \"q?\", \"answer\": \"a\"}\n");
    const std::string cfg_path = write_config(
        "mod_err.json",
        {{"model", tiny_model_json()},
         {"curriculum", {{"steps_per_chunk", 1}}},
         {"paths",
          {{"documents", {doc}}, {"qa", qa}, {"checkpoint", ckpt},
           {"out", scratch("mod_err_out.qtlc")}}}});

    const RunResult r = run_cli({"finetune", "--config", cfg_path, "--quiet"});
    REQUIRE(r.exit_code == 6);
    REQUIRE(r.json["error"]["code"] == "reference_error");
}

TEST_CASE("seed override flows through the whole pipeline") {
    const std::string cfg_path = write_config("seed.json", {{"model", tiny_model_json()}});
    const std::string a = scratch("seed11a.qtlc");
    const std::string b = scratch("seed11b.qtlc");
    const std::string c = scratch("seed12.qtlc");

    const RunResult ra =
        run_cli({"compress", "--config", cfg_path, "--seed", "11", "--out", a, "--quiet"});
    const RunResult rb =
        run_cli({"compress", "--config", cfg_path, "--seed", "11", "--out", b, "--quiet"});
    const RunResult rc =
        run_cli({"compress", "--config", cfg_path, "--seed", "12", "--out", c, "--quiet"});
    REQUIRE(ra.exit_code == 0);
    REQUIRE(rb.exit_code == 0);
    REQUIRE(rc.exit_code == 0);

    REQUIRE(equal_except_timestamp(read_bytes(a), read_bytes(b)));
    REQUIRE_FALSE(equal_except_timestamp(read_bytes(a), read_bytes(c)));

    nlohmann::json sa = ra.json;
    nlohmann::json sb = rb.json;
    sa.erase("output_path");
    sb.erase("output_path");
    REQUIRE(sa == sb);
}

TEST_CASE("finetune runs the curriculum end to end") {
    const std::string ckpt = make_checkpoint("ft");
    const std::string doc = scratch("ft_doc.txt");
    write_file(doc, "The pump house valve is painted red and opens clockwise.\n");
    const std::string qa = scratch("ft_qa.jsonl");
    write_file(qa,
               "{\"doc_id\": \"ft_doc\", \"section_index\": 0, "
               "\"question\": \"Which way does the valve open?\", "
               "\"answer\": \"clockwise\"}\n");
    const std::string corpus = scratch("ft_probe.txt");
    write_file(corpus, kCorpusText);
    const std::string out = scratch("ft_out.qtlc");
    const std::string cfg_path = write_config(
        "ft.json",
        {{"model", tiny_model_json()},
         {"curriculum", {{"steps_per_chunk", 1}, {"step_size", 0.001}}},
         {"paths",
          {{"documents", {doc}}, {"qa", qa}, {"probe", corpus}, {"checkpoint", ckpt},
           {"out", out}}}});

    const RunResult r = run_cli({"finetune", "--config", cfg_path});
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.json_ok);
    REQUIRE(r.json["report_type"] == "finetune");
    REQUIRE(schema_check::validate_json(load_schema("finetune_report.schema.json"), r.json)
                .empty());
    REQUIRE(r.err.find("fine-tuning") != std::string::npos);
    REQUIRE(r.json["chunks"].size() == 1);
    REQUIRE(r.json["chunks"][0]["doc_id"] == "ft_doc");
    REQUIRE(r.json["probe"]["available"] == true);

    // coefficients mode writes a loadable compressed checkpoint plus reports
    const CheckpointData data = read_checkpoint(out);
    REQUIRE(data.model.layers.size() == 6);
    const nlohmann::json file_report =
        nlohmann::json::parse(read_file(out + ".finetune.json"));
    REQUIRE(
        schema_check::validate_json(load_schema("finetune_report.schema.json"), file_report)
            .empty());
    REQUIRE(schema_check::validate_csv(load_schema("finetune_curve.csv.schema.json"),
                                       read_file(out + ".finetune.csv"))
                .empty());
}

TEST_CASE("a one-cell ablation grid emits a schema-valid CSV") {
    const std::string doc = scratch("ab_doc.txt");
    write_file(doc, "The winch pawl is seated before any lift begins.\n");
    const std::string qa = scratch("ab_qa.jsonl");
    write_file(qa,
               "{\"doc_id\": \"ab_doc\", \"section_index\": 0, "
               "\"question\": \"What is seated first?\", "
               "\"answer\": \"the winch pawl\"}\n");
    const std::string corpus = scratch("ab_corpus.txt");
    write_file(corpus, kCorpusText);
    const std::string out = scratch("ab_grid.csv");
    const std::string cfg_path = write_config(
        "ablate.json",
        {{"model", tiny_model_json()},
         {"curriculum", {{"steps_per_chunk", 1}, {"step_size", 0.001}}},
         {"ablation",
          {{"layouts", {"uniform"}},
           {"align", {false}},
           {"etas", {0.9}},
           {"curricula", {"sectionwise"}}}},
         {"paths",
          {{"documents", {doc}}, {"qa", qa}, {"probe", corpus}, {"corpus", corpus},
           {"out", out}}}});

    const RunResult r = run_cli({"ablate", "--config", cfg_path, "--quiet"});
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.json_ok);
    REQUIRE(r.json["report_type"] == "ablate");
    REQUIRE(r.json["cell_count"] == 1);
    REQUIRE(r.json["failed_cell_count"] == 0);
    REQUIRE(schema_check::validate_json(load_schema("ablate_report.schema.json"), r.json)
                .empty());

    const std::string csv = read_file(out);
    REQUIRE(schema_check::validate_csv(load_schema("ablation_grid.csv.schema.json"), csv)
                .empty());
    REQUIRE(schema_check::parse_csv(csv).size() == 2);
    REQUIRE(std::filesystem::exists(
        scratch("ab_grid.uniform_eta0p9_alignoff_sectionwise.finetune.csv")));
}

TEST_CASE("pipeline config parsing") {
    SECTION("an empty object yields the documented defaults") {
        const PipelineConfig cfg = parse_pipeline_config(nlohmann::json::object());
        REQUIRE(cfg.layout_kind == LayoutKind::quasiperiodic);
        REQUIRE(cfg.model.d_model == 32);
        REQUIRE(cfg.rank_policy.mode == RankPolicy::Mode::energy);
        REQUIRE(cfg.truncation_policy.mode == TruncationPolicy::Mode::threshold);
        REQUIRE(cfg.truncation_policy.tau == 0.0);
        REQUIRE(cfg.curriculum_mode == "sectionwise");
        REQUIRE(cfg.ablation.etas == std::vector<double>{0.5, 0.7, 0.9});
    }
    SECTION("every section lands in the struct") {
        const nlohmann::json root = {
            {"model", tiny_model_json()},
            {"layout",
             {{"kind", "uniform"},
              {"seed_offset", 3},
              {"catalog",
               {{{"p", 4}, {"q", 4}, {"rank", 2}}, {{"p", 2}, {"q", 2}, {"rank", 1}}}}}},
            {"rank_policy", {{"mode", "fixed"}, {"r", 3}, {"r_max", 5}}},
            {"truncation_policy", {{"mode", "topk"}, {"k", 9}}},
            {"align", {{"steps", 17}, {"temperature", 1.5}}},
            {"curriculum",
             {{"mode", "onepass"}, {"trainables", "all-matrices"}, {"epochs", 2}}},
            {"paths", {{"corpus", "c.txt"}, {"documents", {"d1.txt", "d2.txt"}}}},
            {"ablation", {{"etas", {0.25, 0.5}}}}};
        const PipelineConfig cfg = parse_pipeline_config(root);
        REQUIRE(cfg.layout_kind == LayoutKind::uniform);
        REQUIRE(cfg.seed_offset == 3);
        REQUIRE(cfg.catalog.shapes.size() == 2);
        REQUIRE(cfg.catalog.shapes[0].p == 4);
        REQUIRE(cfg.rank_policy.mode == RankPolicy::Mode::fixed);
        REQUIRE(cfg.rank_policy.fixed_rank == 3);
        REQUIRE(cfg.rank_policy.r_max.has_value());
        REQUIRE(*cfg.rank_policy.r_max == 5);
        REQUIRE(cfg.truncation_policy.mode == TruncationPolicy::Mode::topk);
        REQUIRE(cfg.truncation_policy.k == 9);
        REQUIRE(cfg.align.steps == 17);
        REQUIRE(cfg.align.temperature == 1.5);
        REQUIRE(cfg.curriculum_mode == "onepass");
        REQUIRE(cfg.curriculum.trainables == CurriculumConfig::Trainables::all_matrices);
        REQUIRE(cfg.curriculum.epochs == 2);
        REQUIRE(cfg.paths.corpus == "c.txt");
        REQUIRE(cfg.paths.documents == std::vector<std::string>{"d1.txt", "d2.txt"});
        REQUIRE(cfg.ablation.etas == std::vector<double>{0.25, 0.5});
    }
    SECTION("mistakes are named") {
        const std::vector<nlohmann::json> bad = {
            {{"model", {{"d_modle", 8}}}},
            {{"model", {{"d_model", "big"}}}},
            {{"layout", {{"kind", "penrose"}}}},
            {{"rank_policy", {{"mode", "best"}}}},
            {{"truncation_policy", {{"mode", "softest"}}}},
            {{"curriculum", {{"trainables", "some"}}}},
            {{"curriculum", {{"mode", "shuffled"}}}},
            {{"ablation", {{"etas", nlohmann::json::array()}}}},
            {{"ablation", {{"etas", {1.5}}}}},
            {{"ablation", {{"curricula", {"randomized"}}}}},
        };
        for (const nlohmann::json& root : bad) {
            CAPTURE(root.dump());
            try {
                parse_pipeline_config(root);
                FAIL("config accepted");
            } catch (const Error& e) {
                REQUIRE(e.code() == ErrorCode::config_error);
            }
        }
        try {
            parse_pipeline_config(nlohmann::json::array());
            FAIL("non-object root accepted");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::config_error);
        }
    }
}
