#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "emprobe/backend.hpp"
#include "emprobe/dataset.hpp"
#include "emprobe/probe.hpp"

namespace emprobe {

// Mann-Whitney AUROC: P(pos > neg) with ties counted one half.
double auroc(std::span<const double> pos, std::span<const double> neg);

enum class threshold_rule {
    test_midpoint,  // midpoint of class means computed on the scored lists
    fixed,          // caller-supplied threshold (e.g. derived from training scores)
};

struct accuracy_result {
    double accuracy = 0.0;
    double threshold = 0.0;
};

// predict positive iff score > threshold
accuracy_result accuracy_at(std::span<const double> pos, std::span<const double> neg,
                            threshold_rule rule = threshold_rule::test_midpoint, double fixed_threshold = 0.0);

struct separation_result {
    double separation = 0.0; // |mean(pos) - mean(neg)|
    double std_pos = 0.0;    // sample std, 0 when n == 1
    double std_neg = 0.0;
    double effect_size = 0.0; // separation / pooled std, 0 when pooled std is 0
};

separation_result separation_stats(std::span<const double> pos, std::span<const double> neg);

double mean_of(std::span<const double> xs);
double sample_std(std::span<const double> xs);

// Linear-interpolated empirical percentile, q in [0, 100].
double percentile(std::vector<double> xs, double q);

struct layer_validation {
    int layer = 0;
    double auroc = 0.0;
    double accuracy = 0.0;
    double separation = 0.0;
    double std_empathic = 0.0;
    double std_non = 0.0;
    double effect_size = 0.0;
    double threshold = 0.0;
    size_t n_test_pairs = 0;
    std::vector<double> scores_empathic;
    std::vector<double> scores_non;
};

layer_validation validate_scores(int layer, std::vector<double> scores_empathic, std::vector<double> scores_non,
                                 size_t n_test_pairs);

struct random_baseline_report {
    size_t n_directions = 0;
    double mean_auroc = 0.0;
    double std_auroc = 0.0;
    double p95_auroc = 0.0;
    double probe_auroc = 0.0;
    double z_score = 0.0;
    bool exceeds_p95 = false;
    uint64_t seed = 0;
    std::vector<double> aurocs;
};

// (probe - mean) / std; 0 when std == 0
double baseline_z_score(double probe_auroc, double mean_auroc, double std_auroc);

// Draws n unit directions (componentwise N(0,1), normalised); direction i
// uses its own generator seeded from (seed, i) so the draw is
// order-independent and safe to parallelise.
random_baseline_report random_baseline(std::span<const activation_vector> test_empathic,
                                       std::span<const activation_vector> test_non, size_t n, uint64_t seed,
                                       double probe_auroc);

// One row per probe, in probe order. Throws validation_error when a probe's
// model_id differs from the backend's.
std::vector<layer_validation> validate_layers(activation_backend & backend, std::span<const probe> probes,
                                              std::span<const contrastive_pair> test_pairs);

struct ablation_comparison {
    double auroc_before = 0.0;
    double auroc_after = 0.0;
    double mean_replacements = 0.0;
    size_t total_replacements = 0;
    size_t residual_hits = 0; // lexicon hits left in the ablated texts
    std::vector<double> scores_before_empathic, scores_before_non;
    std::vector<double> scores_after_empathic, scores_after_non;
};

ablation_comparison ablation_compare(activation_backend & backend, const probe & p,
                                     std::span<const contrastive_pair> test_pairs, const lexicon & lex);

} // namespace emprobe
