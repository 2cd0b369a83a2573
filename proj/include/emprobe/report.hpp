#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emprobe/correlation.hpp"
#include "emprobe/dataset.hpp"
#include "emprobe/steering.hpp"
#include "emprobe/validation.hpp"

namespace emprobe {

constexpr const char * report_format_version = "1.0";
constexpr const char * tool_version = "0.3.0";

// Round to 6 significant digits (the precision of every reported number).
double round_sig6(double x);
std::string format_sig6(double x);

struct ablation_block {
    int layer = 0;
    std::string lexicon_name;
    size_t lexicon_size = 0;
    ablation_comparison result;
};

struct run_report {
    std::string format_version = report_format_version;
    std::string tool = tool_version;
    std::string command;
    ordered_json config = ordered_json::object();
    std::map<std::string, std::string> input_hashes;
    std::vector<layer_validation> layers;
    std::optional<random_baseline_report> baseline;
    std::optional<int> baseline_layer;
    std::optional<ablation_block> ablation;
    std::vector<correlation_report> correlations;
    std::optional<sweep_summary> steering;
    std::map<std::string, double> timing_seconds;
};

// rounded = true writes 6-significant-digit numbers (the report proper);
// false keeps full precision (the raw sidecar).
ordered_json report_to_json(const run_report & r, bool rounded);
// Throws parse_error on an unknown major format version.
run_report report_from_json(const ordered_json & j);

// Writes <stem>.json (rounded) and <stem>.raw.json (full precision),
// each atomically.
void write_report(const run_report & r, const std::filesystem::path & dir, const std::string & stem);
run_report read_report(const std::filesystem::path & path);

// Merge non-empty blocks of b into a (later fragments win).
void merge_report(run_report & a, const run_report & b);

// Plain-text renderings.
std::string render_validation_table(const std::vector<layer_validation> & rows);
std::string render_steering_table(const sweep_summary & s, int layer);
std::string render_report(const run_report & r);

// Plot-data: tab-separated with a header row.
std::string plot_auroc_by_layer(const std::vector<layer_validation> & rows);
std::string plot_baseline_histogram(const random_baseline_report & b, size_t bins = 20);
std::string plot_dose_response(const std::vector<sweep_cell> & cells);
std::string plot_baseline_by_scenario(const sweep_summary & s);
std::string plot_correlation_scatter(const correlation_report & c);

} // namespace emprobe
