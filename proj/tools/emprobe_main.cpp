// emprobe: probe extraction, validation and steering experiments from a config file.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "emprobe/commands.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/io.hpp"

namespace {

struct shared_flags {
    std::string config;
    std::string out;
    std::optional<uint64_t> seed;
    std::string backend;
};

void add_shared(CLI::App * sub, shared_flags & f) {
    sub->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", f.seed, "top-level seed (overrides seed)");
    sub->add_option("--backend", f.backend, "synthetic or real (overrides backend.kind)")
        ->check(CLI::IsMember({"synthetic", "real"}));
}

// One JSON line on stderr; also error.json under the output directory when known.
void report_error(const std::string & command, const char * kind, int code, const std::string & msg,
                  const std::filesystem::path * out_dir) {
    const emprobe::ordered_json rec{
        {"error", {{"command", command}, {"kind", kind}, {"exit_code", code}, {"message", msg}}}};
    std::cerr << rec.dump() << "\n";
    if (out_dir) {
        try {
            emprobe::io::write_file_atomic(*out_dir / "error.json", rec.dump(2) + "\n");
        } catch (...) {
            // the stderr record is authoritative
        }
    }
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"emprobe: linear concept probes, baselines and steering sweeps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(emprobe::tool_version));

    shared_flags flags;
    size_t max_new_trials = 0;
    const char * names[] = {"extract", "validate", "baseline", "ablate", "correlate", "steer", "report"};
    const char * help[] = {
        "extract one probe per configured layer from the training split",
        "held-out validation table plus random baseline and ablation blocks",
        "random-direction AUROC baseline at the analysis layer",
        "lexical ablation before/after AUROC at the analysis layer",
        "correlate probe projections with behavior scores",
        "run (or resume) the steering sweep",
        "merge stage reports into report.json and report.txt",
    };
    for (size_t i = 0; i < std::size(names); ++i) {
        auto * sub = app.add_subcommand(names[i], help[i]);
        add_shared(sub, flags);
        if (std::string(names[i]) == "steer") {
            sub->add_option("--max-new-trials", max_new_trials, "stop after this many new trials (0: run to completion)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp & e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion & e) {
        return app.exit(e);
    } catch (const CLI::ParseError & e) {
        app.exit(e);
        report_error("", "config", emprobe::exit_config_error, e.what(), nullptr);
        return emprobe::exit_config_error;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    std::optional<std::filesystem::path> out_dir;
    try {
        auto cfg = emprobe::load_config(flags.config);
        emprobe::config_overrides o;
        o.seed = flags.seed;
        if (!flags.backend.empty()) o.backend = flags.backend;
        if (!flags.out.empty()) o.output_dir = flags.out;
        emprobe::apply_overrides(cfg, o);
        out_dir = cfg.output_dir;

        if (command == "extract") {
            const auto res = emprobe::cmd_extract(cfg);
            for (const auto & p : res.probe_files) std::cout << p.string() << "\n";
            std::cout << res.manifest.string() << "\n";
        } else if (command == "validate") {
            const auto r = emprobe::cmd_validate(cfg);
            std::cout << emprobe::render_report(r);
        } else if (command == "baseline") {
            std::cout << emprobe::render_report(emprobe::cmd_baseline(cfg));
        } else if (command == "ablate") {
            std::cout << emprobe::render_report(emprobe::cmd_ablate(cfg));
        } else if (command == "correlate") {
            std::cout << emprobe::render_report(emprobe::cmd_correlate(cfg));
        } else if (command == "steer") {
            const auto r = emprobe::cmd_steer(cfg, max_new_trials);
            if (r.steering) {
                std::cout << emprobe::render_report(r);
            } else {
                std::cout << "sweep stopped after " << max_new_trials
                          << " new trials; rerun the same command to resume\n";
            }
        } else if (command == "report") {
            std::cout << emprobe::render_report(emprobe::cmd_report(cfg));
        }
        return emprobe::exit_ok;
    } catch (const emprobe::error & e) {
        const int code = emprobe::exit_code_for(e.kind());
        report_error(command, emprobe::error_kind_name(e.kind()), code, e.what(), out_dir ? &*out_dir : nullptr);
        return code;
    } catch (const std::exception & e) {
        report_error(command, "internal", emprobe::exit_internal_error, e.what(), out_dir ? &*out_dir : nullptr);
        return emprobe::exit_internal_error;
    }
}
