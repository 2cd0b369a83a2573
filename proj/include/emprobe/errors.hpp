#pragma once

#include <stdexcept>
#include <string>

namespace emprobe {

// Error taxonomy. The CLI maps each family onto a distinct exit code.
enum class error_kind {
    argument,
    parse,
    validation,
    degenerate_probe,
    backend,
    config,
    io,
    generation,
};

const char * error_kind_name(error_kind kind);

class error : public std::runtime_error {
public:
    error(error_kind kind, const std::string & msg) : std::runtime_error(msg), kind_(kind) {}
    error_kind kind() const { return kind_; }

private:
    error_kind kind_;
};

struct argument_error : error {
    explicit argument_error(const std::string & msg) : error(error_kind::argument, msg) {}
};

// line is 1-based; 0 means "not line oriented"
struct parse_error : error {
    parse_error(const std::string & msg, size_t line = 0)
        : error(error_kind::parse, line ? "line " + std::to_string(line) + ": " + msg : msg), line(line) {}
    size_t line;
};

struct validation_error : error {
    explicit validation_error(const std::string & msg) : error(error_kind::validation, msg) {}
};

struct degenerate_probe_error : error {
    explicit degenerate_probe_error(const std::string & msg) : error(error_kind::degenerate_probe, msg) {}
};

struct backend_error : error {
    backend_error(const std::string & model_id, const std::string & msg)
        : error(error_kind::backend, "[" + model_id + "] " + msg), model_id(model_id) {}
    std::string model_id;
};

struct config_error : error {
    explicit config_error(const std::string & msg) : error(error_kind::config, msg) {}
};

struct io_error : error {
    explicit io_error(const std::string & msg) : error(error_kind::io, msg) {}
};

struct generation_error : error {
    generation_error(const std::string & scenario_id, const std::string & msg)
        : error(error_kind::generation, "scenario '" + scenario_id + "': " + msg), scenario_id(scenario_id) {}
    std::string scenario_id;
};

} // namespace emprobe
