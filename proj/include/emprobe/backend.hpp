#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emprobe/dataset.hpp"

namespace emprobe {

using vec = std::vector<float>;

double dot(std::span<const float> a, std::span<const float> b);
double norm(std::span<const float> a);

struct model_spec {
    std::string model_id;
    int hidden_dim = 0;
    int num_layers = 0;
    std::vector<int> probe_layers;

    // {8,12,16,20,24} clipped to num_layers-1, deduplicated
    static std::vector<int> default_probe_layers(int num_layers);
    void check() const;
};

struct activation_vector {
    std::string model_id;
    int layer = 0;
    vec values;
};

// Additive intervention h' = h + alpha * direction at `layer` (zero-based
// block index, residual-stream output).
struct steering {
    vec direction;
    double alpha = 0.0;
    int layer = 0;
};

struct sampling_params {
    double temperature = 0.7;
    int max_tokens = 128;
    uint64_t seed = 0;
};

struct generation_result {
    std::string text;
    int tokens_emitted = 0;
    std::optional<std::pair<int, double>> steering; // (layer, alpha)
    sampling_params sampling;
};

class activation_backend {
public:
    virtual ~activation_backend() = default;

    virtual const model_spec & spec() const = 0;

    // Synthetic backends take a latent in [-1, 1]; real backends reject it.
    virtual bool accepts_latent() const = 0;

    // Mean-pooled hidden state at `layer`. When `intervention` is set the
    // additive steering is applied during the forward pass.
    virtual activation_vector embed(std::string_view text, int layer, std::optional<double> latent = {},
                                    const steering * intervention = nullptr) = 0;

    virtual generation_result generate(std::string_view prompt, const steering * intervention,
                                       const sampling_params & sampling) = 0;

    // Independent instance with identical observable behaviour.
    virtual std::unique_ptr<activation_backend> clone() const = 0;

protected:
    void check_layer(int layer) const;
    void check_steering(const steering * s) const;
};

struct class_activations {
    std::vector<activation_vector> empathic;
    std::vector<activation_vector> non_empathic;
};

// Embeds both texts of each pair; latents +1/-1 when the backend accepts them.
class_activations probe_layer_activations(activation_backend & backend, std::span<const contrastive_pair> pairs,
                                          int layer);

} // namespace emprobe
