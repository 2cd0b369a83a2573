#include "emprobe/synthetic_backend.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "bundled_data.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/hashing.hpp"
#include "emprobe/random.hpp"

namespace emprobe {

namespace {

constexpr uint64_t tag_planted = fnv1a64("planted-direction");
constexpr uint64_t tag_offset = fnv1a64("layer-offset");
constexpr uint64_t tag_noise = fnv1a64("embed-noise");
constexpr uint64_t tag_generate = fnv1a64("generate");

std::vector<std::string> lexicon_words(std::string_view contents) {
    return parse_lexicon("vocab", contents).words;
}

const char * const filler_words[] = {
    "the",  "a",    "and",   "to",    "of",    "in",   "that",  "it",    "we",    "is",
    "for",  "on",   "with",  "as",    "this",  "at",   "be",    "so",    "then",  "now",
    "there", "here", "next", "first", "after", "before", "while", "still", "just", "also",
    "they", "you",  "i",     "our",   "their", "my",   "will",  "can",   "should", "would",
};

} // namespace

synthetic_world::synthetic_world(synthetic_params params) : params_(std::move(params)) {
    auto & p = params_;
    if (p.hidden_dim <= 0 || p.num_layers <= 0) {
        throw config_error("synthetic world: hidden_dim and num_layers must be positive");
    }
    if (!(p.signal_strength > 0.0)) {
        throw config_error("synthetic world: signal_strength must be positive");
    }
    if (!(p.noise_sigma >= 0.0) || !(p.offset_sigma >= 0.0)) {
        throw config_error("synthetic world: noise_sigma and offset_sigma must be nonnegative");
    }
    if (p.empathy_vocab.empty()) {
        p.empathy_vocab = lexicon_words(bundled::grade_empathy_lexicon);
    }
    if (p.task_vocab.empty()) {
        p.task_vocab = lexicon_words(bundled::grade_task_lexicon);
    }
    if (!(p.filler_rate >= 0.0 && p.filler_rate < 1.0)) {
        throw config_error("synthetic world: filler_rate must be in [0, 1)");
    }
    std::unordered_set<std::string> emp(p.empathy_vocab.begin(), p.empathy_vocab.end());
    for (const auto & w : p.task_vocab) {
        if (emp.count(w)) {
            throw config_error("synthetic world: word '" + w + "' is in both vocabularies");
        }
    }
    const std::unordered_set<std::string> task(p.task_vocab.begin(), p.task_vocab.end());
    for (const char * w : filler_words) {
        if (!emp.count(w) && !task.count(w)) {
            filler_.emplace_back(w);
        }
    }

    const auto dim = static_cast<size_t>(p.hidden_dim);
    planted_.resize(dim);
    {
        rng r(mix_seed(p.seed, tag_planted));
        double n2 = 0.0;
        for (auto & x : planted_) {
            x = r.normal();
            n2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (auto & x : planted_) {
            x *= inv;
        }
    }
    offsets_.resize(static_cast<size_t>(p.num_layers));
    for (int l = 0; l < p.num_layers; ++l) {
        rng r(mix_seed(p.seed, tag_offset, static_cast<uint64_t>(l)));
        auto & off = offsets_[static_cast<size_t>(l)];
        off.resize(dim);
        for (auto & x : off) {
            x = p.offset_sigma * r.normal();
        }
    }
}

double synthetic_world::breakdown_threshold() const {
    return params_.breakdown_threshold.value_or(5.0 * params_.signal_strength);
}

double synthetic_world::empathy_probability(double prompt_latent, double steer_component) const {
    const double z = params_.logistic_k * (prompt_latent + steer_component * params_.signal_strength);
    return 1.0 / (1.0 + std::exp(-z));
}

double synthetic_world::degenerate_probability(double steer_component) const {
    const double t = breakdown_threshold();
    if (!(steer_component < -t)) {
        return 0.0;
    }
    return std::min(1.0, (std::abs(steer_component) - t) / 10.0);
}

synthetic_backend::synthetic_backend(std::shared_ptr<const synthetic_world> world) : world_(std::move(world)) {
    const auto & p = world_->params();
    spec_.model_id = p.model_id;
    spec_.hidden_dim = p.hidden_dim;
    spec_.num_layers = p.num_layers;
    spec_.probe_layers = model_spec::default_probe_layers(p.num_layers);
}

synthetic_backend::synthetic_backend(synthetic_params params)
    : synthetic_backend(std::make_shared<const synthetic_world>(std::move(params))) {}

activation_vector synthetic_backend::embed(std::string_view text, int layer, std::optional<double> latent,
                                           const steering * intervention) {
    check_layer(layer);
    check_steering(intervention);
    const double z = latent.value_or(0.0);
    if (!(z >= -1.0 && z <= 1.0)) {
        throw argument_error("latent must be in [-1, 1]");
    }
    const auto & p = world_->params();
    const auto & off = world_->layer_offset(layer);
    const auto & planted = world_->planted_direction();
    const double amp = z * p.signal_strength;
    const bool steer = intervention && layer >= intervention->layer;

    rng r(mix_seed(p.seed, tag_noise, fnv1a64(text), static_cast<uint64_t>(layer)));
    activation_vector out;
    out.model_id = p.model_id;
    out.layer = layer;
    out.values.resize(off.size());
    for (size_t i = 0; i < off.size(); ++i) {
        double v = off[i] + amp * planted[i] + p.noise_sigma * r.normal();
        if (steer) {
            v += intervention->alpha * static_cast<double>(intervention->direction[i]);
        }
        out.values[i] = static_cast<float>(v);
    }
    return out;
}

generation_result synthetic_backend::generate(std::string_view prompt, const steering * intervention,
                                              const sampling_params & sampling) {
    check_steering(intervention);
    if (sampling.max_tokens <= 0) {
        throw argument_error("max_tokens must be positive");
    }
    const auto & p = world_->params();

    double steer_component = 0.0;
    if (intervention) {
        const auto & planted = world_->planted_direction();
        double ip = 0.0;
        for (size_t i = 0; i < planted.size(); ++i) {
            ip += static_cast<double>(intervention->direction[i]) * planted[i];
        }
        steer_component = intervention->alpha * ip;
    }

    generation_result out;
    out.sampling = sampling;
    if (intervention) {
        out.steering = std::make_pair(intervention->layer, intervention->alpha);
    }

    rng r(mix_seed(p.seed, tag_generate, fnv1a64(prompt), sampling.seed));
    if (r.bernoulli(world_->degenerate_probability(steer_component))) {
        if (r.bernoulli(0.5)) {
            return out; // empty output
        }
        const auto & w = p.task_vocab[r.below(p.task_vocab.size())];
        for (int i = 0; i < sampling.max_tokens; ++i) {
            if (i) out.text += ' ';
            out.text += w;
        }
        out.tokens_emitted = sampling.max_tokens;
        return out;
    }

    const double pe = world_->empathy_probability(prompt_latent_, steer_component);
    for (int i = 0; i < sampling.max_tokens; ++i) {
        const auto & vocab = r.bernoulli(p.filler_rate) ? world_->filler_vocab()
                             : r.bernoulli(pe)          ? p.empathy_vocab
                                                        : p.task_vocab;
        if (i) out.text += ' ';
        out.text += vocab[r.below(vocab.size())];
    }
    out.tokens_emitted = sampling.max_tokens;
    return out;
}

std::unique_ptr<activation_backend> synthetic_backend::clone() const {
    auto b = std::make_unique<synthetic_backend>(world_);
    b->prompt_latent_ = prompt_latent_;
    return b;
}

} // namespace emprobe
