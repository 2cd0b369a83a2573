#include "emprobe/http_backend.hpp"

#include <httplib.h>

#include <cmath>

#include "emprobe/errors.hpp"

namespace emprobe {

using nlohmann::json;

struct http_backend::impl {
    explicit impl(const http_backend_config & cfg) : client(cfg.endpoint) {
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(cfg.timeout_seconds, 0);
        client.set_write_timeout(cfg.timeout_seconds, 0);
    }
    httplib::Client client;
};

namespace {

json steering_json(const steering & s) {
    return json{{"layer", s.layer}, {"alpha", s.alpha}, {"direction", s.direction}};
}

} // namespace

http_backend::http_backend(http_backend_config cfg) : cfg_(std::move(cfg)), impl_(std::make_unique<impl>(cfg_)) {
    const std::string who = cfg_.model_id.empty() ? cfg_.endpoint : cfg_.model_id;
    auto res = impl_->client.Get("/info");
    if (!res) {
        throw backend_error(who, "model server unreachable at " + cfg_.endpoint + " (" +
                                     httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
        throw backend_error(who, "/info returned HTTP " + std::to_string(res->status));
    }
    try {
        auto j = json::parse(res->body);
        spec_.model_id = j.at("model_id").get<std::string>();
        spec_.hidden_dim = j.at("hidden_dim").get<int>();
        spec_.num_layers = j.at("num_layers").get<int>();
    } catch (const json::exception & e) {
        throw backend_error(who, std::string("malformed /info response: ") + e.what());
    }
    if (!cfg_.model_id.empty() && cfg_.model_id != spec_.model_id) {
        throw backend_error(who, "server reports model '" + spec_.model_id + "'");
    }
    spec_.probe_layers = model_spec::default_probe_layers(spec_.num_layers);
}

http_backend::~http_backend() = default;

namespace {

json post_json(httplib::Client & client, const std::string & model_id, const std::string & path, const json & body) {
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw backend_error(model_id, path + ": request failed (" + httplib::to_string(res.error()) + ")");
    }
    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::exception &) {
        throw backend_error(model_id, path + ": HTTP " + std::to_string(res->status) + ", non-JSON body");
    }
    if (res->status != 200) {
        std::string msg = j.contains("error") && j["error"].is_string() ? j["error"].get<std::string>() : res->body;
        throw backend_error(model_id, path + ": HTTP " + std::to_string(res->status) + ": " + msg);
    }
    return j;
}

} // namespace

activation_vector http_backend::embed(std::string_view text, int layer, std::optional<double> latent,
                                      const steering * intervention) {
    if (latent) {
        throw argument_error("model '" + spec_.model_id + "' is a real backend; latent must be absent");
    }
    check_layer(layer);
    check_steering(intervention);
    json body{{"text", std::string(text)}, {"layer", layer}, {"options", cfg_.options}};
    if (intervention) {
        body["steering"] = steering_json(*intervention);
    }
    auto j = post_json(impl_->client, spec_.model_id, "/embed", body);
    activation_vector out;
    out.model_id = spec_.model_id;
    out.layer = layer;
    try {
        out.values = j.at("values").get<vec>();
    } catch (const json::exception & e) {
        throw backend_error(spec_.model_id, std::string("/embed: malformed response: ") + e.what());
    }
    if (static_cast<int>(out.values.size()) != spec_.hidden_dim) {
        throw backend_error(spec_.model_id, "/embed returned " + std::to_string(out.values.size()) +
                                                " values, expected " + std::to_string(spec_.hidden_dim));
    }
    for (float v : out.values) {
        if (!std::isfinite(v)) {
            throw backend_error(spec_.model_id, "/embed returned a non-finite value");
        }
    }
    return out;
}

generation_result http_backend::generate(std::string_view prompt, const steering * intervention,
                                         const sampling_params & sampling) {
    check_steering(intervention);
    if (sampling.max_tokens <= 0) {
        throw argument_error("max_tokens must be positive");
    }
    json body{{"prompt", std::string(prompt)},
              {"sampling",
               {{"temperature", sampling.temperature}, {"max_tokens", sampling.max_tokens}, {"seed", sampling.seed}}},
              {"options", cfg_.options}};
    if (intervention) {
        body["steering"] = steering_json(*intervention);
    }
    auto j = post_json(impl_->client, spec_.model_id, "/generate", body);
    generation_result out;
    out.sampling = sampling;
    if (intervention) {
        out.steering = std::make_pair(intervention->layer, intervention->alpha);
    }
    try {
        out.text = j.at("text").get<std::string>();
        out.tokens_emitted = j.value("tokens_emitted", 0);
    } catch (const json::exception & e) {
        throw backend_error(spec_.model_id, std::string("/generate: malformed response: ") + e.what());
    }
    return out;
}

std::unique_ptr<activation_backend> http_backend::clone() const {
    return std::make_unique<http_backend>(cfg_);
}

} // namespace emprobe
