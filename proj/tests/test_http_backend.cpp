#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "emprobe/errors.hpp"
#include "emprobe/http_backend.hpp"

using namespace emprobe;
using nlohmann::json;

namespace {

// In-process model server speaking the backend wire protocol.
class mock_server {
public:
    mock_server() {
        srv_.Get("/info", [](const httplib::Request &, httplib::Response & res) {
            res.set_content(json{{"model_id", "mock-model"}, {"hidden_dim", 4}, {"num_layers", 3}}.dump(),
                            "application/json");
        });
        srv_.Post("/embed", [this](const httplib::Request & req, httplib::Response & res) {
            const auto body = json::parse(req.body);
            last_embed = body;
            if (body.at("text") == "explode") {
                res.status = 500;
                res.set_content(json{{"error", "forward pass failed"}}.dump(), "application/json");
                return;
            }
            const auto n = body.at("text") == "short" ? 3 : 4;
            std::vector<float> v(static_cast<size_t>(n), static_cast<float>(body.at("layer").get<int>()));
            if (body.contains("steering")) v[0] += body["steering"]["alpha"].get<float>();
            res.set_content(json{{"model_id", "mock-model"}, {"layer", body.at("layer")}, {"values", v}}.dump(),
                            "application/json");
        });
        srv_.Post("/generate", [this](const httplib::Request & req, httplib::Response & res) {
            const auto body = json::parse(req.body);
            last_generate = body;
            std::string text = "echo:" + body.at("prompt").get<std::string>();
            if (body.contains("steering")) text += " alpha=" + std::to_string(body["steering"]["alpha"].get<int>());
            res.set_content(json{{"text", text}, {"tokens_emitted", 2}}.dump(), "application/json");
        });
        port_ = srv_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { srv_.listen_after_bind(); });
        srv_.wait_until_ready();
    }
    ~mock_server() {
        srv_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

    json last_embed;
    json last_generate;

private:
    httplib::Server srv_;
    int port_ = 0;
    std::thread thread_;
};

http_backend_config config_for(const mock_server & s) {
    http_backend_config c;
    c.endpoint = s.endpoint();
    c.timeout_seconds = 5;
    c.options = {{"dtype", "bf16"}};
    return c;
}

} // namespace

TEST(HttpBackend, ReadsSpecFromInfo) {
    mock_server s;
    http_backend b(config_for(s));
    EXPECT_EQ(b.spec().model_id, "mock-model");
    EXPECT_EQ(b.spec().hidden_dim, 4);
    EXPECT_EQ(b.spec().num_layers, 3);
    EXPECT_FALSE(b.accepts_latent());
}

TEST(HttpBackend, EmbedAndGenerateRoundTrip) {
    mock_server s;
    http_backend b(config_for(s));
    const auto a = b.embed("hello", 2);
    EXPECT_EQ(a.values, (vec{2, 2, 2, 2}));
    EXPECT_EQ(s.last_embed["options"]["dtype"], "bf16");
    EXPECT_FALSE(s.last_embed.contains("steering"));

    steering st{vec{1, 0, 0, 0}, 3.0, 1};
    EXPECT_EQ(b.embed("hello", 2, {}, &st).values[0], 5.0f);
    EXPECT_EQ(s.last_embed["steering"]["layer"], 1);

    sampling_params sp;
    sp.seed = 9;
    sp.max_tokens = 12;
    const auto g = b.generate("hi", &st, sp);
    EXPECT_EQ(g.text, "echo:hi alpha=3");
    EXPECT_EQ(g.tokens_emitted, 2);
    EXPECT_EQ(s.last_generate["sampling"]["seed"], 9);
    EXPECT_EQ(s.last_generate["sampling"]["max_tokens"], 12);

    auto c = b.clone();
    EXPECT_EQ(c->embed("hello", 0).values, (vec{0, 0, 0, 0}));
}

TEST(HttpBackend, RejectsInvalidRequestsAndResponses) {
    mock_server s;
    http_backend b(config_for(s));
    EXPECT_THROW(b.embed("x", 1, 0.5), argument_error);
    EXPECT_THROW(b.embed("x", 3), argument_error);
    EXPECT_THROW(b.embed("short", 1), backend_error);
    try {
        b.embed("explode", 1);
        FAIL();
    } catch (const backend_error & e) {
        EXPECT_NE(std::string(e.what()).find("forward pass failed"), std::string::npos);
        EXPECT_EQ(e.model_id, "mock-model");
    }
}

TEST(HttpBackend, ModelIdMismatchIsRefused) {
    mock_server s;
    auto c = config_for(s);
    c.model_id = "some-other-model";
    EXPECT_THROW(http_backend{c}, backend_error);
    c.model_id = "mock-model";
    EXPECT_NO_THROW(http_backend{c});
}

TEST(HttpBackend, UnreachableServerIsBackendError) {
    http_backend_config c;
    // reserved port on loopback with nothing listening
    c.endpoint = "http://127.0.0.1:1";
    c.model_id = "absent";
    try {
        http_backend b(c);
        FAIL();
    } catch (const error & e) {
        EXPECT_EQ(e.kind(), error_kind::backend);
        EXPECT_NE(std::string(e.what()).find("unreachable"), std::string::npos);
    }
}
