#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emprobe/backend.hpp"
#include "emprobe/probe.hpp"

namespace emprobe {

struct scored_completion {
    std::string id;
    std::string scenario_id;
    std::string text;
    int behavior_score = 0; // 0 non-empathic, 1 moderate, 2 empathic
    std::string source_model;
};

std::vector<scored_completion> load_completions(const std::filesystem::path & path);
std::vector<scored_completion> parse_completions(std::string_view contents);

struct correlation_result {
    double r = 0.0;
    double p = 1.0;
};

enum class p_value_method {
    t_distribution, // t = r sqrt((n-2)/(1-r^2)), two-sided, n-2 df
    permutation,    // exact for n <= 9, otherwise 200000 seeded shuffles
};

// Throws argument_error on length mismatch or n < 3, and
// validation_error("undefined correlation") when either input is constant.
correlation_result pearson(std::span<const double> x, std::span<const double> y,
                           p_value_method method = p_value_method::t_distribution, uint64_t seed = 0);
correlation_result spearman(std::span<const double> x, std::span<const double> y,
                            p_value_method method = p_value_method::t_distribution, uint64_t seed = 0);

// two-sided p-value of r under H0 via the t transform
double correlation_p_value(double r, size_t n);

// average ranks, 1-based
std::vector<double> average_ranks(std::span<const double> xs);

struct confusion_summary {
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double specificity = 0.0;
    double threshold = 0.0;

    size_t n() const { return tp + fp + tn + fn; }
};

// predict positive iff score > threshold; 0/0 ratios are reported as 0
confusion_summary binary_metrics(std::span<const double> scores, std::span<const int> labels, double threshold);

struct correlation_report {
    std::string model_id;
    int layer = 0;
    correlation_result pearson;
    correlation_result spearman;
    size_t n = 0;
    confusion_summary binary;
    std::vector<double> projections;
    std::vector<int> behavior_scores;
};

// How a synthetic backend should be told about a completion's latent.
enum class completion_latent {
    none,                // embed the text as-is
    from_behavior_score, // latent = behavior_score - 1 (synthetic construction only)
};

// Embed, project, correlate against behavior scores; binary metrics over the
// score-0/score-2 items with the midpoint of their group means as threshold.
correlation_report correlate_completions(activation_backend & backend, const probe & p,
                                         std::span<const scored_completion> completions,
                                         completion_latent latent = completion_latent::none);

struct agreement_reports {
    correlation_report a;
    correlation_report b;
};

agreement_reports agreement_study(activation_backend & backend_a, const probe & probe_a,
                                  activation_backend & backend_b, const probe & probe_b,
                                  std::span<const scored_completion> completions,
                                  completion_latent latent = completion_latent::none);

} // namespace emprobe
