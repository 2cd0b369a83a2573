#pragma once

#include <map>
#include <memory>
#include <string>

#include "emprobe/backend.hpp"

namespace emprobe {

// Client for a model server that owns the real LLM (see
// tools/hf_backend_server.py). Wire protocol, JSON over HTTP:
//
//   GET  /info      -> {"model_id", "hidden_dim", "num_layers"}
//   POST /embed     {"text", "layer", "steering"?}            -> {"model_id", "layer", "values": [..]}
//   POST /generate  {"prompt", "steering"?, "sampling": {...}} -> {"text", "tokens_emitted"}
//
// where steering = {"layer", "alpha", "direction": [..]} and
// sampling = {"temperature", "max_tokens", "seed"}. Errors come back as
// non-2xx with {"error": "..."}.
struct http_backend_config {
    std::string endpoint = "http://127.0.0.1:8077";
    std::string model_id;                     // expected model id; empty accepts whatever /info reports
    std::map<std::string, std::string> options; // opaque runtime hints, forwarded with every request
    int timeout_seconds = 600;
};

class http_backend final : public activation_backend {
public:
    // Queries /info; throws backend_error when the server is unreachable.
    explicit http_backend(http_backend_config cfg);
    ~http_backend() override;

    const model_spec & spec() const override { return spec_; }
    bool accepts_latent() const override { return false; }

    activation_vector embed(std::string_view text, int layer, std::optional<double> latent = {},
                            const steering * intervention = nullptr) override;

    generation_result generate(std::string_view prompt, const steering * intervention,
                               const sampling_params & sampling) override;

    std::unique_ptr<activation_backend> clone() const override;

private:
    struct impl;
    http_backend_config cfg_;
    model_spec spec_;
    std::unique_ptr<impl> impl_;
};

} // namespace emprobe
