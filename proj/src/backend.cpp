#include "emprobe/backend.hpp"

#include <algorithm>
#include <cmath>

#include "emprobe/errors.hpp"

namespace emprobe {

double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw argument_error("dot: dimension mismatch " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

double norm(std::span<const float> a) {
    return std::sqrt(dot(a, a));
}

std::vector<int> model_spec::default_probe_layers(int num_layers) {
    std::vector<int> out;
    for (int l : {8, 12, 16, 20, 24}) {
        const int c = std::min(l, num_layers - 1);
        if (c >= 0 && std::find(out.begin(), out.end(), c) == out.end()) {
            out.push_back(c);
        }
    }
    return out;
}

void model_spec::check() const {
    if (hidden_dim <= 0) {
        throw config_error("model '" + model_id + "': hidden_dim must be positive");
    }
    if (num_layers <= 0) {
        throw config_error("model '" + model_id + "': num_layers must be positive");
    }
    for (int l : probe_layers) {
        if (l < 0 || l >= num_layers) {
            throw config_error("model '" + model_id + "': probe layer " + std::to_string(l) + " outside [0, " +
                               std::to_string(num_layers) + ")");
        }
    }
}

void activation_backend::check_layer(int layer) const {
    const auto & s = spec();
    if (layer < 0 || layer >= s.num_layers) {
        throw argument_error("layer " + std::to_string(layer) + " outside [0, " + std::to_string(s.num_layers) +
                             ") for model '" + s.model_id + "'");
    }
}

void activation_backend::check_steering(const steering * st) const {
    if (!st) {
        return;
    }
    const auto & s = spec();
    if (static_cast<int>(st->direction.size()) != s.hidden_dim) {
        throw argument_error("steering direction has dimension " + std::to_string(st->direction.size()) +
                             ", model '" + s.model_id + "' has " + std::to_string(s.hidden_dim));
    }
    check_layer(st->layer);
    if (!std::isfinite(st->alpha)) {
        throw argument_error("steering alpha must be finite");
    }
}

class_activations probe_layer_activations(activation_backend & backend, std::span<const contrastive_pair> pairs,
                                          int layer) {
    if (pairs.empty()) {
        throw argument_error("probe_layer_activations: no pairs");
    }
    const bool latent = backend.accepts_latent();
    class_activations out;
    out.empathic.reserve(pairs.size());
    out.non_empathic.reserve(pairs.size());
    for (const auto & p : pairs) {
        try {
            out.empathic.push_back(backend.embed(p.empathic_text, layer, latent ? std::optional(1.0) : std::nullopt));
            out.non_empathic.push_back(
                backend.embed(p.non_empathic_text, layer, latent ? std::optional(-1.0) : std::nullopt));
        } catch (const error & e) {
            throw error(e.kind(), "pair '" + p.id + "': " + e.what());
        }
    }
    return out;
}

} // namespace emprobe
