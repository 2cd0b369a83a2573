#include "emprobe/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "emprobe/errors.hpp"
#include "emprobe/io.hpp"

namespace emprobe {

namespace {

// Rejects keys outside `allowed` so typos surface as config errors.
void check_keys(const ordered_json & j, const std::string & where, std::initializer_list<const char *> allowed) {
    if (!j.is_object()) {
        throw config_error(where + " must be an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char * k) { return it.key() == k; })) {
            throw config_error(where + ": unknown key '" + it.key() + "'");
        }
    }
}

template <typename T>
T get_as(const ordered_json & j, const std::string & where) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception &) {
        throw config_error(where + ": wrong type");
    }
}

template <typename T>
void read_opt(const ordered_json & j, const char * key, const std::string & where, T & out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        out = get_as<T>(*it, where + "." + key);
    }
}

template <typename T>
void read_opt(const ordered_json & j, const char * key, const std::string & where, std::optional<T> & out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        out = get_as<T>(*it, where + "." + key);
    }
}

void read_path(const ordered_json & j, const char * key, const std::string & where, const std::filesystem::path & base,
               std::filesystem::path & out) {
    std::string s;
    read_opt(j, key, where, s);
    if (s.empty()) {
        return;
    }
    std::filesystem::path p(s);
    out = (p.is_absolute() ? p : base / p).lexically_normal();
}

ordered_json path_json(const std::filesystem::path & p) {
    return p.empty() ? ordered_json(nullptr) : ordered_json(p.string());
}

template <typename T>
ordered_json opt_json(const std::optional<T> & v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

const char * latent_name(completion_latent l) {
    return l == completion_latent::from_behavior_score ? "from_behavior_score" : "none";
}

} // namespace

std::vector<int> experiment_config::layers() const {
    return backend.probe_layers.empty() ? model_spec::default_probe_layers(backend.num_layers) : backend.probe_layers;
}

experiment_config parse_config(const ordered_json & j, const std::filesystem::path & base_dir) {
    check_keys(j, "config", {"schema_version", "seed", "backend", "dataset", "lexicons", "baseline", "correlation",
                             "steering", "output_dir"});
    experiment_config c;
    if (!j.contains("schema_version")) {
        throw config_error("config: missing schema_version");
    }
    c.schema_version = get_as<int>(j["schema_version"], "schema_version");
    if (c.schema_version != config_schema_version) {
        throw config_error("config: schema_version " + std::to_string(c.schema_version) + " unsupported (expected " +
                           std::to_string(config_schema_version) + ")");
    }
    read_opt(j, "seed", "config", c.seed);

    auto & b = c.backend;
    if (auto it = j.find("backend"); it != j.end()) {
        const auto & bj = *it;
        check_keys(bj, "backend",
                   {"kind", "model_id", "hidden_dim", "num_layers", "probe_layers", "synthetic", "real", "cache_dir"});
        std::string kind = "synthetic";
        read_opt(bj, "kind", "backend", kind);
        if (kind == "synthetic") {
            b.kind = backend_kind::synthetic;
        } else if (kind == "real") {
            b.kind = backend_kind::real;
        } else {
            throw config_error("backend.kind must be 'synthetic' or 'real', got '" + kind + "'");
        }
        read_opt(bj, "model_id", "backend", b.model_id);
        if (b.kind == backend_kind::real && !bj.contains("model_id")) {
            b.model_id.clear(); // accept whatever the server reports
        }
        read_opt(bj, "hidden_dim", "backend", b.hidden_dim);
        read_opt(bj, "num_layers", "backend", b.num_layers);
        read_opt(bj, "probe_layers", "backend", b.probe_layers);
        if (auto s = bj.find("synthetic"); s != bj.end()) {
            check_keys(*s, "backend.synthetic",
                       {"seed", "signal_strength", "noise_sigma", "offset_sigma", "logistic_k", "breakdown_threshold",
                        "filler_rate"});
            auto & sp = b.synthetic;
            if (s->contains("seed") && !(*s)["seed"].is_null()) {
                sp.seed = get_as<uint64_t>((*s)["seed"], "backend.synthetic.seed");
                b.synthetic_seed_explicit = true;
            }
            read_opt(*s, "signal_strength", "backend.synthetic", sp.signal_strength);
            read_opt(*s, "noise_sigma", "backend.synthetic", sp.noise_sigma);
            read_opt(*s, "offset_sigma", "backend.synthetic", sp.offset_sigma);
            read_opt(*s, "logistic_k", "backend.synthetic", sp.logistic_k);
            read_opt(*s, "filler_rate", "backend.synthetic", sp.filler_rate);
            read_opt(*s, "breakdown_threshold", "backend.synthetic", sp.breakdown_threshold);
        }
        if (auto r = bj.find("real"); r != bj.end()) {
            check_keys(*r, "backend.real", {"endpoint", "options", "timeout_seconds"});
            read_opt(*r, "endpoint", "backend.real", b.real.endpoint);
            read_opt(*r, "options", "backend.real", b.real.options);
            read_opt(*r, "timeout_seconds", "backend.real", b.real.timeout_seconds);
        }
        std::filesystem::path cache;
        read_path(bj, "cache_dir", "backend", base_dir, cache);
        if (!cache.empty()) b.cache_dir = cache;
    }
    if (b.hidden_dim <= 0 || b.num_layers <= 0) {
        throw config_error("backend: hidden_dim and num_layers must be positive");
    }
    for (int l : b.probe_layers) {
        if (l < 0 || l >= b.num_layers) {
            throw config_error("backend.probe_layers: layer " + std::to_string(l) + " outside [0, " +
                               std::to_string(b.num_layers) + ")");
        }
    }
    b.synthetic.model_id = b.model_id;
    b.synthetic.hidden_dim = b.hidden_dim;
    b.synthetic.num_layers = b.num_layers;
    if (!b.synthetic_seed_explicit) b.synthetic.seed = c.seed;
    b.real.model_id = b.kind == backend_kind::real ? b.model_id : std::string();

    if (auto it = j.find("dataset"); it != j.end()) {
        check_keys(*it, "dataset", {"pairs", "scenarios", "split_ratio", "split_seed", "stratified"});
        read_path(*it, "pairs", "dataset", base_dir, c.pairs_path);
        read_path(*it, "scenarios", "dataset", base_dir, c.scenarios_path);
        read_opt(*it, "split_ratio", "dataset", c.split_ratio);
        read_opt(*it, "split_seed", "dataset", c.split_seed);
        read_opt(*it, "stratified", "dataset", c.stratified);
    }
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) {
        throw config_error("dataset.split_ratio must be in (0, 1)");
    }

    if (auto it = j.find("lexicons"); it != j.end()) {
        check_keys(*it, "lexicons", {"ablation", "grade_empathy", "grade_task"});
        read_path(*it, "ablation", "lexicons", base_dir, c.ablation_lexicon_path);
        read_path(*it, "grade_empathy", "lexicons", base_dir, c.grade_empathy_lexicon_path);
        read_path(*it, "grade_task", "lexicons", base_dir, c.grade_task_lexicon_path);
    }

    if (auto it = j.find("baseline"); it != j.end()) {
        check_keys(*it, "baseline", {"n", "seed", "layer"});
        read_opt(*it, "n", "baseline", c.baseline_n);
        read_opt(*it, "seed", "baseline", c.baseline_seed);
        read_opt(*it, "layer", "baseline", c.baseline_layer);
    }
    if (c.baseline_n == 0) {
        throw config_error("baseline.n must be positive");
    }

    if (auto it = j.find("correlation"); it != j.end()) {
        check_keys(*it, "correlation", {"completions", "layer", "latent"});
        read_path(*it, "completions", "correlation", base_dir, c.completions_path);
        read_opt(*it, "layer", "correlation", c.correlation_layer);
        std::string latent = "none";
        read_opt(*it, "latent", "correlation", latent);
        if (latent == "none") {
            c.correlation_latent = completion_latent::none;
        } else if (latent == "from_behavior_score") {
            c.correlation_latent = completion_latent::from_behavior_score;
        } else {
            throw config_error("correlation.latent must be 'none' or 'from_behavior_score'");
        }
    }

    if (auto it = j.find("steering"); it != j.end()) {
        const auto & sj = *it;
        check_keys(sj, "steering",
                   {"alphas", "layer", "scenarios", "samples_per_condition", "temperature", "max_tokens", "seed",
                    "success_delta", "require_coherence", "coherence"});
        auto & s = c.steering;
        read_opt(sj, "alphas", "steering", s.alphas);
        read_opt(sj, "layer", "steering", s.layer);
        read_opt(sj, "scenarios", "steering", s.scenarios);
        read_opt(sj, "samples_per_condition", "steering", s.samples_per_condition);
        read_opt(sj, "temperature", "steering", s.temperature);
        read_opt(sj, "max_tokens", "steering", s.max_tokens);
        read_opt(sj, "seed", "steering", c.steering_seed);
        read_opt(sj, "success_delta", "steering", c.success_delta);
        read_opt(sj, "require_coherence", "steering", c.require_coherence);
        if (auto co = sj.find("coherence"); co != sj.end()) {
            check_keys(*co, "steering.coherence", {"max_repeat_run", "min_distinct_ratio"});
            read_opt(*co, "max_repeat_run", "steering.coherence", c.coherence.max_repeat_run);
            read_opt(*co, "min_distinct_ratio", "steering.coherence", c.coherence.min_distinct_ratio);
        }
    }
    c.steering.seed = c.effective_steering_seed();
    c.steering.check();
    if (c.steering.layer >= b.num_layers) {
        throw config_error("steering.layer outside the model's layers");
    }
    if (!(c.success_delta >= 0.0)) {
        throw config_error("steering.success_delta must be nonnegative");
    }

    std::filesystem::path out;
    read_path(j, "output_dir", "config", base_dir, out);
    c.output_dir = out.empty() ? (base_dir / "out").lexically_normal() : out;

    c.snapshot = config_to_json(c);
    return c;
}

experiment_config load_config(const std::filesystem::path & path) {
    std::string contents;
    try {
        contents = io::read_file(path);
    } catch (const error & e) {
        throw config_error(e.what());
    }
    ordered_json j;
    try {
        j = ordered_json::parse(contents);
    } catch (const nlohmann::json::parse_error & e) {
        throw config_error(path.string() + ": " + e.what());
    }
    auto base = std::filesystem::absolute(path).parent_path();
    try {
        return parse_config(j, base);
    } catch (const config_error & e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

void apply_overrides(experiment_config & cfg, const config_overrides & o) {
    if (o.seed) {
        cfg.seed = *o.seed;
        if (!cfg.backend.synthetic_seed_explicit) cfg.backend.synthetic.seed = cfg.seed;
        cfg.steering.seed = cfg.effective_steering_seed();
    }
    if (o.backend) {
        if (*o.backend == "synthetic") {
            cfg.backend.kind = backend_kind::synthetic;
            cfg.backend.real.model_id.clear();
        } else if (*o.backend == "real") {
            if (cfg.backend.kind != backend_kind::real) {
                cfg.backend.model_id.clear();
            }
            cfg.backend.kind = backend_kind::real;
            cfg.backend.real.model_id = cfg.backend.model_id;
        } else {
            throw config_error("--backend must be 'synthetic' or 'real'");
        }
    }
    if (o.output_dir) {
        cfg.output_dir = std::filesystem::absolute(*o.output_dir).lexically_normal();
    }
    cfg.snapshot = config_to_json(cfg);
}

ordered_json config_to_json(const experiment_config & c) {
    const auto & b = c.backend;
    ordered_json synthetic{{"signal_strength", b.synthetic.signal_strength},
                           {"noise_sigma", b.synthetic.noise_sigma},
                           {"offset_sigma", b.synthetic.offset_sigma},
                           {"logistic_k", b.synthetic.logistic_k},
                           {"filler_rate", b.synthetic.filler_rate},
                           {"breakdown_threshold", opt_json(b.synthetic.breakdown_threshold)}};
    if (b.synthetic_seed_explicit) {
        synthetic["seed"] = b.synthetic.seed;
    }
    ordered_json backend{{"kind", b.kind == backend_kind::real ? "real" : "synthetic"},
                         {"model_id", b.model_id},
                         {"hidden_dim", b.hidden_dim},
                         {"num_layers", b.num_layers},
                         {"probe_layers", c.layers()},
                         {"synthetic", synthetic},
                         {"real",
                          {{"endpoint", b.real.endpoint},
                           {"options", b.real.options},
                           {"timeout_seconds", b.real.timeout_seconds}}},
                         {"cache_dir", b.cache_dir ? ordered_json(b.cache_dir->string()) : ordered_json(nullptr)}};
    const auto & s = c.steering;
    return ordered_json{
        {"schema_version", c.schema_version},
        {"seed", c.seed},
        {"backend", backend},
        {"dataset",
         {{"pairs", path_json(c.pairs_path)},
          {"scenarios", path_json(c.scenarios_path)},
          {"split_ratio", c.split_ratio},
          {"split_seed", opt_json(c.split_seed)},
          {"stratified", c.stratified}}},
        {"lexicons",
         {{"ablation", path_json(c.ablation_lexicon_path)},
          {"grade_empathy", path_json(c.grade_empathy_lexicon_path)},
          {"grade_task", path_json(c.grade_task_lexicon_path)}}},
        {"baseline", {{"n", c.baseline_n}, {"seed", opt_json(c.baseline_seed)}, {"layer", opt_json(c.baseline_layer)}}},
        {"correlation",
         {{"completions", path_json(c.completions_path)},
          {"layer", c.correlation_layer},
          {"latent", latent_name(c.correlation_latent)}}},
        {"steering",
         {{"alphas", s.alphas},
          {"layer", s.layer},
          {"scenarios", s.scenarios},
          {"samples_per_condition", s.samples_per_condition},
          {"temperature", s.temperature},
          {"max_tokens", s.max_tokens},
          {"seed", opt_json(c.steering_seed)},
          {"success_delta", c.success_delta},
          {"require_coherence", c.require_coherence},
          {"coherence",
           {{"max_repeat_run", c.coherence.max_repeat_run}, {"min_distinct_ratio", c.coherence.min_distinct_ratio}}}}},
        {"output_dir", c.output_dir.string()},
    };
}

} // namespace emprobe
