#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "emprobe/backend.hpp"

namespace emprobe {

// On-disk vector store keyed by (model_id, layer, sha256(text)).
// File layout: 8-byte magic "EPACTV01", uint64 dim, then dim float32, all
// little-endian.
class activation_cache {
public:
    explicit activation_cache(std::filesystem::path dir);

    std::filesystem::path path_for(std::string_view model_id, int layer, std::string_view text) const;
    std::optional<vec> get(std::string_view model_id, int layer, std::string_view text) const;
    void put(std::string_view model_id, int layer, std::string_view text, const vec & values) const;

    static std::string encode(const vec & values);
    static vec decode(std::string_view bytes);

private:
    std::filesystem::path dir_;
};

// Decorator serving plain embed() calls (no latent, no steering) from a cache.
class cached_backend final : public activation_backend {
public:
    cached_backend(std::unique_ptr<activation_backend> inner, std::filesystem::path cache_dir);

    const model_spec & spec() const override { return inner_->spec(); }
    bool accepts_latent() const override { return inner_->accepts_latent(); }
    activation_vector embed(std::string_view text, int layer, std::optional<double> latent = {},
                            const steering * intervention = nullptr) override;
    generation_result generate(std::string_view prompt, const steering * intervention,
                               const sampling_params & sampling) override;
    std::unique_ptr<activation_backend> clone() const override;

    size_t hits() const { return hits_; }
    size_t misses() const { return misses_; }

private:
    std::unique_ptr<activation_backend> inner_;
    activation_cache cache_;
    std::filesystem::path dir_;
    size_t hits_ = 0;
    size_t misses_ = 0;
};

} // namespace emprobe
