#include "emprobe/commands.hpp"

#include <chrono>
#include <cstdio>

#include "emprobe/activation_cache.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/hashing.hpp"
#include "emprobe/http_backend.hpp"
#include "emprobe/io.hpp"
#include "emprobe/synthetic_backend.hpp"

namespace emprobe {

int exit_code_for(error_kind kind) {
    switch (kind) {
    case error_kind::config:
        return exit_config_error;
    case error_kind::argument:
    case error_kind::parse:
    case error_kind::validation:
    case error_kind::degenerate_probe:
    case error_kind::io:
        return exit_input_error;
    case error_kind::backend:
    case error_kind::generation:
        return exit_backend_error;
    }
    return exit_internal_error;
}

std::unique_ptr<activation_backend> make_backend(const backend_config & cfg) {
    std::unique_ptr<activation_backend> b;
    if (cfg.kind == backend_kind::synthetic) {
        b = std::make_unique<synthetic_backend>(cfg.synthetic);
    } else {
        b = std::make_unique<http_backend>(cfg.real);
    }
    if (cfg.cache_dir) {
        b = std::make_unique<cached_backend>(std::move(b), *cfg.cache_dir);
    }
    return b;
}

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void require_file(const std::filesystem::path & p, const std::string & key) {
    if (p.empty()) {
        throw config_error(key + " is not set");
    }
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) {
        throw config_error(key + ": no such file " + p.string());
    }
}

std::filesystem::path probe_dir(const experiment_config & cfg) {
    return cfg.output_dir / "probes";
}

std::filesystem::path probe_path(const experiment_config & cfg, int layer) {
    char name[32];
    std::snprintf(name, sizeof name, "layer_%02d.probe", layer);
    return probe_dir(cfg) / name;
}

// Everything a command needs about its inputs, resolved once.
struct inputs {
    std::vector<contrastive_pair> pairs;
    dataset_split split;
    std::string dataset_hash;
    lexicon ablation;
    grading_lexicons grading;
    std::map<std::string, std::string> hashes;
};

lexicon lexicon_or_default(const std::filesystem::path & p, const std::string & key, const lexicon & fallback) {
    if (p.empty()) {
        return fallback;
    }
    require_file(p, key);
    return load_lexicon(p);
}

inputs load_inputs(const experiment_config & cfg) {
    inputs in;
    require_file(cfg.pairs_path, "dataset.pairs");
    in.pairs = load_pairs(cfg.pairs_path);
    if (in.pairs.size() < 2) {
        throw validation_error("dataset needs at least 2 pairs to split");
    }
    in.split = split_pairs(in.pairs, cfg.split_ratio, cfg.effective_split_seed(), cfg.stratified);
    in.dataset_hash = sha256_file(cfg.pairs_path);
    in.hashes["pairs"] = in.dataset_hash;
    in.ablation = lexicon_or_default(cfg.ablation_lexicon_path, "lexicons.ablation", default_ablation_lexicon());
    in.hashes["lexicon.ablation"] = in.ablation.hash;
    const auto & dg = default_grading_lexicons();
    in.grading.empathy = lexicon_or_default(cfg.grade_empathy_lexicon_path, "lexicons.grade_empathy", dg.empathy);
    in.grading.task = lexicon_or_default(cfg.grade_task_lexicon_path, "lexicons.grade_task", dg.task);
    in.hashes["lexicon.grade_empathy"] = in.grading.empathy.hash;
    in.hashes["lexicon.grade_task"] = in.grading.task.hash;
    if (!cfg.scenarios_path.empty()) {
        require_file(cfg.scenarios_path, "dataset.scenarios");
        in.hashes["scenarios"] = sha256_file(cfg.scenarios_path);
    } else {
        in.hashes["scenarios"] = "bundled";
    }
    return in;
}

// The synthetic world's vocabularies follow the configured grading lexicons.
std::unique_ptr<activation_backend> backend_for(const experiment_config & cfg, const inputs & in) {
    auto bc = cfg.backend;
    if (bc.kind == backend_kind::synthetic) {
        bc.synthetic.empathy_vocab = in.grading.empathy.words;
        bc.synthetic.task_vocab = in.grading.task.words;
    }
    return make_backend(bc);
}

run_report fragment(const experiment_config & cfg, const inputs & in, const std::string & command) {
    run_report r;
    r.command = command;
    r.config = cfg.snapshot.empty() ? config_to_json(cfg) : cfg.snapshot;
    r.input_hashes = in.hashes;
    return r;
}

void check_probe_provenance(const probe & p, const inputs & in) {
    if (!p.dataset_hash.empty() && p.dataset_hash != in.dataset_hash) {
        throw validation_error("probe for layer " + std::to_string(p.layer) +
                               " was extracted from a different dataset; rerun extract");
    }
}

void add_probe_hash(run_report & r, const experiment_config & cfg, int layer) {
    r.input_hashes["probe.layer_" + std::to_string(layer)] = sha256_file(probe_path(cfg, layer));
}

void write_text(const std::filesystem::path & p, const std::string & s) {
    io::write_file_atomic(p, s);
}

const layer_validation * best_layer(const std::vector<layer_validation> & rows) {
    const layer_validation * best = nullptr;
    for (const auto & v : rows) {
        if (!best || v.auroc > best->auroc) best = &v;
    }
    return best;
}

int pick_analysis_layer(const experiment_config & cfg, const std::vector<layer_validation> & rows) {
    if (cfg.baseline_layer) {
        return *cfg.baseline_layer;
    }
    const auto * b = best_layer(rows);
    if (!b) {
        throw validation_error("no validated layers to choose a baseline layer from");
    }
    return b->layer;
}

// Validation rows for the configured probes, reusing one backend.
std::vector<layer_validation> validate_all(activation_backend & backend, const std::vector<probe> & probes,
                                           const inputs & in) {
    for (const auto & p : probes) check_probe_provenance(p, in);
    return validate_layers(backend, probes, in.split.test);
}

void run_baseline(run_report & r, const experiment_config & cfg, activation_backend & backend, const probe & p,
                  double probe_auroc, const inputs & in) {
    auto acts = probe_layer_activations(backend, in.split.test, p.layer);
    r.baseline = random_baseline(acts.empathic, acts.non_empathic, cfg.baseline_n, cfg.effective_baseline_seed(),
                                 probe_auroc);
    r.baseline_layer = p.layer;
}

void run_ablation(run_report & r, activation_backend & backend, const probe & p, const inputs & in) {
    ablation_block a;
    a.layer = p.layer;
    a.lexicon_name = in.ablation.name;
    a.lexicon_size = in.ablation.words.size();
    a.result = ablation_compare(backend, p, in.split.test, in.ablation);
    r.ablation = std::move(a);
}

const probe & probe_at(const std::vector<probe> & probes, int layer) {
    for (const auto & p : probes) {
        if (p.layer == layer) return p;
    }
    throw config_error("no probe for layer " + std::to_string(layer) + " (probe_layers does not include it)");
}

const layer_validation & row_at(const std::vector<layer_validation> & rows, int layer) {
    for (const auto & v : rows) {
        if (v.layer == layer) return v;
    }
    throw config_error("layer " + std::to_string(layer) + " was not validated");
}

void write_validation_outputs(const run_report & r, const std::filesystem::path & dir) {
    if (!r.layers.empty()) {
        write_text(dir / "table.md", render_validation_table(r.layers));
        write_text(dir / "auroc_by_layer.tsv", plot_auroc_by_layer(r.layers));
    }
    if (r.baseline) {
        write_text(dir / "baseline_histogram.tsv", plot_baseline_histogram(*r.baseline));
    }
}

} // namespace

std::vector<probe> load_probes(const experiment_config & cfg) {
    std::vector<probe> out;
    for (int layer : cfg.layers()) {
        out.push_back(load_probe_for_layer(cfg, layer));
    }
    return out;
}

probe load_probe_for_layer(const experiment_config & cfg, int layer) {
    const auto path = probe_path(cfg, layer);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        throw io_error("probe file " + path.string() + " not found; run `emprobe extract` first");
    }
    auto p = load_probe(path);
    if (p.layer != layer) {
        throw validation_error(path.string() + " holds a probe for layer " + std::to_string(p.layer));
    }
    return p;
}

extract_result cmd_extract(const experiment_config & cfg) {
    const auto in = load_inputs(cfg);
    auto backend = backend_for(cfg, in);
    backend->spec().check();
    const auto layers = cfg.layers();
    for (int l : layers) {
        if (l >= backend->spec().num_layers) {
            throw config_error("probe layer " + std::to_string(l) + " outside model '" + backend->spec().model_id +
                               "' with " + std::to_string(backend->spec().num_layers) + " layers");
        }
    }

    extract_result res;
    ordered_json manifest_probes = ordered_json::array();
    for (int layer : layers) {
        const auto acts = probe_layer_activations(*backend, in.split.train, layer);
        extract_options opt;
        opt.n_train_pairs = in.split.train.size();
        opt.dataset_hash = in.dataset_hash;
        opt.lexicon_hash = in.ablation.hash;
        const auto p = extract(acts.empathic, acts.non_empathic, opt);
        const auto path = probe_path(cfg, layer);
        save_probe(p, path);
        res.probe_files.push_back(path);
        manifest_probes.push_back({{"layer", layer},
                                   {"file", path.filename().string()},
                                   {"sha256", sha256_file(path)},
                                   {"dim", p.dim()}});
    }

    ordered_json train_ids = ordered_json::array(), test_ids = ordered_json::array();
    for (const auto & p : in.split.train) train_ids.push_back(p.id);
    for (const auto & p : in.split.test) test_ids.push_back(p.id);
    ordered_json manifest{{"format_version", report_format_version},
                          {"tool", {{"name", "emprobe"}, {"version", tool_version}}},
                          {"model_id", backend->spec().model_id},
                          {"input_hashes", in.hashes},
                          {"split",
                           {{"seed", in.split.seed},
                            {"ratio", in.split.ratio},
                            {"stratified", in.split.stratified},
                            {"train", train_ids},
                            {"test", test_ids}}},
                          {"probes", manifest_probes},
                          {"config", cfg.snapshot.empty() ? config_to_json(cfg) : cfg.snapshot}};
    res.manifest = probe_dir(cfg) / "manifest.json";
    write_text(res.manifest, manifest.dump(2) + "\n");
    return res;
}

run_report cmd_validate(const experiment_config & cfg) {
    const auto in = load_inputs(cfg);
    auto r = fragment(cfg, in, "validate");
    const auto probes = load_probes(cfg);
    for (const auto & p : probes) add_probe_hash(r, cfg, p.layer);
    auto backend = backend_for(cfg, in);

    auto t0 = clock_type::now();
    r.layers = validate_all(*backend, probes, in);
    r.timing_seconds["validate"] = seconds_since(t0);

    const int layer = pick_analysis_layer(cfg, r.layers);
    const auto & p = probe_at(probes, layer);
    t0 = clock_type::now();
    run_baseline(r, cfg, *backend, p, row_at(r.layers, layer).auroc, in);
    r.timing_seconds["baseline"] = seconds_since(t0);
    t0 = clock_type::now();
    run_ablation(r, *backend, p, in);
    r.timing_seconds["ablate"] = seconds_since(t0);

    const auto dir = cfg.output_dir / "validate";
    write_report(r, dir, "report");
    write_validation_outputs(r, dir);
    return r;
}

run_report cmd_baseline(const experiment_config & cfg) {
    const auto in = load_inputs(cfg);
    auto r = fragment(cfg, in, "baseline");
    const auto probes = load_probes(cfg);
    auto backend = backend_for(cfg, in);
    const auto t0 = clock_type::now();
    const auto rows = validate_all(*backend, probes, in);
    const int layer = pick_analysis_layer(cfg, rows);
    add_probe_hash(r, cfg, layer);
    run_baseline(r, cfg, *backend, probe_at(probes, layer), row_at(rows, layer).auroc, in);
    r.timing_seconds["baseline"] = seconds_since(t0);
    const auto dir = cfg.output_dir / "baseline";
    write_report(r, dir, "report");
    write_validation_outputs(r, dir);
    return r;
}

run_report cmd_ablate(const experiment_config & cfg) {
    const auto in = load_inputs(cfg);
    auto r = fragment(cfg, in, "ablate");
    const auto probes = load_probes(cfg);
    auto backend = backend_for(cfg, in);
    const auto t0 = clock_type::now();
    int layer = 0;
    if (cfg.baseline_layer) {
        layer = *cfg.baseline_layer;
    } else {
        layer = pick_analysis_layer(cfg, validate_all(*backend, probes, in));
    }
    add_probe_hash(r, cfg, layer);
    const auto & p = probe_at(probes, layer);
    check_probe_provenance(p, in);
    run_ablation(r, *backend, p, in);
    r.timing_seconds["ablate"] = seconds_since(t0);
    const auto dir = cfg.output_dir / "ablate";
    write_report(r, dir, "report");
    const auto & a = r.ablation->result;
    write_text(dir / "ablation.tsv", "condition\tauroc\nbefore\t" + format_sig6(a.auroc_before) + "\nafter\t" +
                                         format_sig6(a.auroc_after) + "\n");
    return r;
}

run_report cmd_correlate(const experiment_config & cfg) {
    const auto in = load_inputs(cfg);
    auto r = fragment(cfg, in, "correlate");
    require_file(cfg.completions_path, "correlation.completions");
    const auto completions = load_completions(cfg.completions_path);
    r.input_hashes["completions"] = sha256_file(cfg.completions_path);
    const auto p = load_probe_for_layer(cfg, cfg.correlation_layer);
    add_probe_hash(r, cfg, p.layer);
    auto backend = backend_for(cfg, in);
    const auto t0 = clock_type::now();
    r.correlations.push_back(correlate_completions(*backend, p, completions, cfg.correlation_latent));
    r.timing_seconds["correlate"] = seconds_since(t0);
    const auto dir = cfg.output_dir / "correlate";
    write_report(r, dir, "report");
    write_text(dir / "scatter.tsv", plot_correlation_scatter(r.correlations.front()));
    return r;
}

run_report cmd_steer(const experiment_config & cfg, size_t max_new_trials) {
    const auto in = load_inputs(cfg);
    auto r = fragment(cfg, in, "steer");
    const auto p = load_probe_for_layer(cfg, cfg.steering.layer);
    check_probe_provenance(p, in);
    add_probe_hash(r, cfg, p.layer);
    const auto scenarios = cfg.scenarios_path.empty() ? default_scenarios() : load_scenarios(cfg.scenarios_path);
    auto backend = backend_for(cfg, in);

    const auto dir = cfg.output_dir / "steer";
    sweep_options opt;
    opt.coherence = cfg.coherence;
    opt.trial_log = dir / "trials.jsonl";
    opt.max_new_trials = max_new_trials;
    const auto t0 = clock_type::now();
    const auto trials = run_sweep(*backend, p, cfg.steering, scenarios, in.grading, opt);
    r.timing_seconds["steer"] = seconds_since(t0);

    const size_t expected =
        cfg.steering.scenarios.size() * cfg.steering.alphas.size() * static_cast<size_t>(cfg.steering.samples_per_condition);
    if (trials.size() < expected) {
        return r; // interrupted on request; rerun resumes from the trial log
    }
    r.steering = summarize(trials, cfg.success_delta, cfg.require_coherence);
    write_report(r, dir, "report");
    write_text(dir / "table.md", render_steering_table(*r.steering, cfg.steering.layer));
    write_text(dir / "dose_response.tsv", plot_dose_response(r.steering->cells));
    write_text(dir / "baseline_by_scenario.tsv", plot_baseline_by_scenario(*r.steering));
    return r;
}

run_report cmd_report(const experiment_config & cfg) {
    run_report r;
    r.command = "report";
    r.config = cfg.snapshot.empty() ? config_to_json(cfg) : cfg.snapshot;
    bool any = false;
    for (const char * stage : {"validate", "baseline", "ablate", "correlate", "steer"}) {
        const auto path = cfg.output_dir / stage / "report.raw.json";
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) continue;
        merge_report(r, read_report(path));
        any = true;
    }
    if (!any) {
        throw io_error("no stage reports under " + cfg.output_dir.string() + "; run validate, correlate or steer first");
    }
    r.command = "report";
    write_report(r, cfg.output_dir, "report");
    write_text(cfg.output_dir / "report.txt", render_report(r));
    return r;
}

} // namespace emprobe
