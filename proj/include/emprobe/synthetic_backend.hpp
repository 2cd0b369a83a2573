#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emprobe/backend.hpp"

namespace emprobe {

struct synthetic_params {
    std::string model_id = "synthetic";
    int hidden_dim = 3072;
    int num_layers = 32;
    uint64_t seed = 0;
    double signal_strength = 1.0;
    double noise_sigma = 0.1;   // per-component std of the embedding noise
    double offset_sigma = 0.5;  // per-component std of the per-layer mean offset
    double logistic_k = 0.25;   // slope of the empathy-word probability
    std::optional<double> breakdown_threshold; // default 5 * signal_strength
    std::vector<std::string> empathy_vocab;    // default: bundled grading lexicon
    std::vector<std::string> task_vocab;
    // Share of generated tokens drawn from a neutral filler vocabulary that
    // neither grading lexicon contains.
    double filler_rate = 0.25;
};

// Planted-direction world. Every observable is a pure function of the
// parameters, the input text and the request.
class synthetic_world {
public:
    explicit synthetic_world(synthetic_params params);

    const synthetic_params & params() const { return params_; }
    const std::vector<double> & planted_direction() const { return planted_; }
    const std::vector<double> & layer_offset(int layer) const { return offsets_.at(layer); }
    double breakdown_threshold() const;
    const std::vector<std::string> & filler_vocab() const { return filler_; }

    // p(empathy word) for a given prompt latent and effective steering
    // alpha * <d_probe, d*>
    double empathy_probability(double prompt_latent, double steer_component) const;
    // probability of degenerate output (0 outside the negative breakdown region)
    double degenerate_probability(double steer_component) const;

private:
    synthetic_params params_;
    std::vector<double> planted_;
    std::vector<std::vector<double>> offsets_;
    std::vector<std::string> filler_;
};

class synthetic_backend final : public activation_backend {
public:
    explicit synthetic_backend(std::shared_ptr<const synthetic_world> world);
    explicit synthetic_backend(synthetic_params params);

    const model_spec & spec() const override { return spec_; }
    bool accepts_latent() const override { return true; }

    // mu_layer + latent * s * d* + eps, with eps seeded by (world seed, text,
    // layer). A steering intervention at layer L adds alpha * d to every
    // layer >= L, since the residual stream carries it forward.
    activation_vector embed(std::string_view text, int layer, std::optional<double> latent = {},
                            const steering * intervention = nullptr) override;

    generation_result generate(std::string_view prompt, const steering * intervention,
                               const sampling_params & sampling) override;

    std::unique_ptr<activation_backend> clone() const override;

    const synthetic_world & world() const { return *world_; }

    // Latent assumed for generation prompts (default 0).
    void set_prompt_latent(double latent) { prompt_latent_ = latent; }

private:
    std::shared_ptr<const synthetic_world> world_;
    model_spec spec_;
    double prompt_latent_ = 0.0;
};

} // namespace emprobe
