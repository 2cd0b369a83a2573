#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emprobe/backend.hpp"
#include "emprobe/dataset.hpp"
#include "emprobe/probe.hpp"

namespace emprobe {

struct steering_config {
    std::vector<double> alphas{-20, -10, -5, -3, -1, 0, 1, 3, 5, 10, 20};
    int layer = 12;
    std::vector<std::string> scenarios{"food_delivery", "listener", "protector"};
    int samples_per_condition = 5;
    double temperature = 0.7;
    int max_tokens = 128;
    uint64_t seed = 0;

    void check() const; // throws config_error
};

struct coherence_options {
    size_t max_repeat_run = 4;        // a run this long is incoherent
    double min_distinct_ratio = 0.3;
};

struct coherence_flags {
    bool is_empty = true;
    size_t max_repeat_run = 0;
    double distinct_token_ratio = 1.0;
    bool code_artifact = false;
    bool coherent = false;
};

coherence_flags assess_coherence(std::string_view text, const coherence_options & opt = {});

// True for lines starting "Output:", fenced-code markers, or a line that is
// only a quoted snake_case token such as 'open_door'.
bool has_code_artifact(std::string_view text);

// e / (e + t) with whole-word case-insensitive hit counts; 0.5 when e + t == 0.
double grade_empathy(std::string_view text, const lexicon & empathy, const lexicon & task);

struct steering_trial {
    std::string scenario_id;
    double alpha = 0.0;
    int sample_index = 0;
    std::string text;
    double empathy_grade = 0.5;
    coherence_flags coherence;
    uint64_t seed_used = 0;
    bool failed = false;
    std::string error;
};

uint64_t trial_seed(uint64_t config_seed, std::string_view scenario_id, double alpha, int sample_index);

struct grading_lexicons {
    lexicon empathy;
    lexicon task;
};

// bundled "grade-empathy" / "grade-task" word lists
const grading_lexicons & default_grading_lexicons();

struct sweep_options {
    coherence_options coherence;
    // Append-only JSONL trial log; completed (scenario, alpha, sample) keys
    // found there are reused instead of regenerated.
    std::optional<std::filesystem::path> trial_log;
    // Stop after generating this many new trials (0: no limit).
    size_t max_new_trials = 0;
};

// Trials ordered by (scenario order in config, alpha order, sample index).
// Backend failures become failed trials with empty text.
std::vector<steering_trial> run_sweep(activation_backend & backend, const probe & p, const steering_config & cfg,
                                      const std::vector<scenario> & scenarios, const grading_lexicons & lex,
                                      const sweep_options & opt = {});

ordered_json trial_to_json(const steering_trial & t);
steering_trial trial_from_json(const ordered_json & j);
// Reads a trial log, ignoring a truncated final line.
std::vector<steering_trial> read_trial_log(const std::filesystem::path & path);

struct sweep_cell {
    std::string scenario_id;
    double alpha = 0.0;
    size_t n = 0;
    double mean_grade = 0.0;
    double std_grade = 0.0;
    double coherence_rate = 0.0;
};

struct scenario_summary {
    std::string scenario_id;
    double baseline_mean = 0.0;
    size_t steered_trials = 0;
    double success_rate = 0.0;          // under the configured strictness
    double success_rate_lenient = 0.0;  // coherence not required
    double success_rate_strict = 0.0;   // coherence required
    double success_rate_positive = 0.0; // alpha > 0 only
    double success_rate_negative = 0.0; // alpha < 0 only
    double coherence_rate = 0.0;        // over all trials of the scenario
};

struct sweep_summary {
    double delta = 0.05;
    bool require_coherence = false;
    std::vector<sweep_cell> cells;
    std::vector<scenario_summary> scenarios;
    double success_rate = 0.0;
    double success_rate_lenient = 0.0;
    double success_rate_strict = 0.0;
    double coherence_rate = 0.0;
    size_t steered_trials = 0;
};

// A steered trial succeeds iff sign(alpha) * (grade - baseline) > delta, and
// additionally is coherent when require_coherence is set.
sweep_summary summarize(std::span<const steering_trial> trials, double delta = 0.05, bool require_coherence = false);

// Per (scenario, alpha) aggregates sorted by (scenario, alpha).
std::vector<sweep_cell> dose_response(std::span<const steering_trial> trials);

} // namespace emprobe
