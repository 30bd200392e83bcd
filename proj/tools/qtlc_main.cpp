// qtlc — compress, align, fine-tune, and inspect tiled spectral checkpoints.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "qtlc/cli.hpp"
#include "qtlc/config.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/reports.hpp"

namespace {

struct Invocation {
    std::string command;
    qtlc::CliOptions opts;
};

int run(const Invocation& inv) {
    qtlc::PipelineConfig cfg;
    if (!inv.opts.config_path.empty()) {
        cfg = qtlc::load_pipeline_config(inv.opts.config_path);
    } else if (inv.command == "compress" || inv.command == "align" ||
               inv.command == "finetune" || inv.command == "eval" ||
               inv.command == "ablate") {
        qtlc::throw_error(qtlc::ErrorCode::config_error,
                          inv.command + " requires --config");
    }
    qtlc::apply_cli_overrides(cfg, inv.opts);

    nlohmann::json out;
    if (inv.command == "compress") {
        out = qtlc::cmd_compress(cfg);
    } else if (inv.command == "decompress") {
        out = qtlc::cmd_decompress(cfg);
    } else if (inv.command == "align") {
        out = qtlc::cmd_align(cfg, inv.opts.quiet);
    } else if (inv.command == "finetune") {
        out = qtlc::cmd_finetune(cfg, inv.opts.quiet);
    } else if (inv.command == "eval") {
        out = qtlc::cmd_eval(cfg);
    } else if (inv.command == "stats") {
        out = qtlc::cmd_stats(cfg);
    } else if (inv.command == "ablate") {
        out = qtlc::cmd_ablate(cfg, inv.opts.quiet);
    } else {
        qtlc::throw_error(qtlc::ErrorCode::config_error, "unknown command " + inv.command);
    }
    std::cout << qtlc::dump_json(out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tiled spectral compression pipeline for a toy transformer"};
    app.require_subcommand(1);

    Invocation inv;
    auto add_common = [&inv](CLI::App* sub) {
        sub->add_option("--config", inv.opts.config_path, "pipeline config JSON");
        sub->add_option("--checkpoint", inv.opts.checkpoint_path, "input checkpoint path");
        sub->add_option("--out", inv.opts.out_path, "output path");
        sub->add_option("--seed", inv.opts.seed, "override every configured seed")
            ->check(CLI::NonNegativeNumber);
        sub->add_flag("--quiet", inv.opts.quiet, "suppress progress messages on stderr");
    };
    add_common(app.add_subcommand("compress", "compress a freshly initialized model"));
    add_common(app.add_subcommand("decompress", "expand a checkpoint back to dense form"));
    add_common(app.add_subcommand("align", "gradient-align retained coefficients"));
    add_common(app.add_subcommand("finetune", "run the section-wise curriculum"));
    add_common(app.add_subcommand("eval", "report divergence, probe, and parameter counts"));
    add_common(app.add_subcommand("stats", "print compression statistics"));
    add_common(app.add_subcommand("ablate", "sweep layout, alignment, energy, curriculum"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // help text included: stdout stays reserved for machine output
        const int rc = app.exit(e, std::cerr, std::cerr);
        return rc == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    inv.command = sub->get_name();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_name() == "--seed" && opt->count() > 0) inv.opts.has_seed = true;
    }

    try {
        return run(inv);
    } catch (const qtlc::Error& e) {
        std::cout << qtlc::dump_json(
            qtlc::error_json(qtlc::error_code_name(e.code()), e.message()));
        if (!inv.opts.quiet) std::fprintf(stderr, "error: %s\n", e.what());
        return qtlc::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cout << qtlc::dump_json(qtlc::error_json("internal", e.what()));
        if (!inv.opts.quiet) std::fprintf(stderr, "error: %s\n", e.what());
        return 6;
    }
}
