#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emprobe/backend.hpp"
#include "emprobe/config.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/probe.hpp"
#include "emprobe/report.hpp"

namespace emprobe {

// Process exit codes.
enum exit_code : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_input_error = 3,
    exit_backend_error = 4,
    exit_internal_error = 5,
};

int exit_code_for(error_kind kind);

std::unique_ptr<activation_backend> make_backend(const backend_config & cfg);

// Output layout under cfg.output_dir:
//   probes/layer_XX.probe, probes/manifest.json
//   validate/report.json (+ .raw.json), tables, plot-data
//   baseline/, ablate/, correlate/, steer/ likewise
//   report.json   merged run report
struct extract_result {
    std::vector<std::filesystem::path> probe_files;
    std::filesystem::path manifest;
};

extract_result cmd_extract(const experiment_config & cfg);
run_report cmd_validate(const experiment_config & cfg);
run_report cmd_baseline(const experiment_config & cfg);
run_report cmd_ablate(const experiment_config & cfg);
run_report cmd_correlate(const experiment_config & cfg);
// max_new_trials > 0 stops the sweep early (the trial log keeps what was
// done); the summary is only written once every trial exists.
run_report cmd_steer(const experiment_config & cfg, size_t max_new_trials = 0);
run_report cmd_report(const experiment_config & cfg);

// Loads probes written by cmd_extract (all configured layers).
std::vector<probe> load_probes(const experiment_config & cfg);
probe load_probe_for_layer(const experiment_config & cfg, int layer);

} // namespace emprobe
