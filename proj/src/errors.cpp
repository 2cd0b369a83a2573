#include "emprobe/errors.hpp"

namespace emprobe {

const char * error_kind_name(error_kind kind) {
    switch (kind) {
        case error_kind::argument:         return "argument";
        case error_kind::parse:            return "parse";
        case error_kind::validation:       return "validation";
        case error_kind::degenerate_probe: return "degenerate_probe";
        case error_kind::backend:          return "backend";
        case error_kind::config:           return "config";
        case error_kind::io:               return "io";
        case error_kind::generation:       return "generation";
    }
    return "unknown";
}

} // namespace emprobe
