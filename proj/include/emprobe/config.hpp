#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emprobe/correlation.hpp"
#include "emprobe/dataset.hpp"
#include "emprobe/http_backend.hpp"
#include "emprobe/steering.hpp"
#include "emprobe/synthetic_backend.hpp"

namespace emprobe {

constexpr int config_schema_version = 1;

enum class backend_kind { synthetic, real };

struct backend_config {
    backend_kind kind = backend_kind::synthetic;
    std::string model_id = "synthetic";
    int hidden_dim = 3072;
    int num_layers = 32;
    std::vector<int> probe_layers; // empty: defaults
    synthetic_params synthetic;
    bool synthetic_seed_explicit = false; // otherwise follows the top-level seed
    http_backend_config real;
    std::optional<std::filesystem::path> cache_dir;
};

struct experiment_config {
    int schema_version = config_schema_version;
    uint64_t seed = 0;
    backend_config backend;

    std::filesystem::path pairs_path;
    std::filesystem::path scenarios_path; // empty: bundled scenarios
    double split_ratio = 0.7;
    std::optional<uint64_t> split_seed;
    bool stratified = false;

    std::filesystem::path ablation_lexicon_path;     // empty: bundled empathy-41
    std::filesystem::path grade_empathy_lexicon_path; // empty: bundled
    std::filesystem::path grade_task_lexicon_path;

    size_t baseline_n = 100;
    std::optional<uint64_t> baseline_seed;
    std::optional<int> baseline_layer; // default: best validated layer

    std::filesystem::path completions_path;
    int correlation_layer = 8;
    completion_latent correlation_latent = completion_latent::none;

    steering_config steering;
    std::optional<uint64_t> steering_seed;
    double success_delta = 0.05;
    bool require_coherence = false;
    coherence_options coherence;

    std::filesystem::path output_dir = "out";

    // The resolved configuration as written into every report.
    ordered_json snapshot;

    uint64_t effective_split_seed() const { return split_seed.value_or(seed); }
    uint64_t effective_baseline_seed() const { return baseline_seed.value_or(seed); }
    uint64_t effective_steering_seed() const { return steering_seed.value_or(seed); }
    std::vector<int> layers() const;
};

// Relative paths resolve against base_dir. Throws config_error.
experiment_config parse_config(const ordered_json & j, const std::filesystem::path & base_dir);
experiment_config load_config(const std::filesystem::path & path);

struct config_overrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> backend;
    std::optional<std::filesystem::path> output_dir;
};

void apply_overrides(experiment_config & cfg, const config_overrides & o);

ordered_json config_to_json(const experiment_config & cfg);

} // namespace emprobe
