#include "emprobe/activation_cache.hpp"

#include <cstdio>
#include <system_error>

#include "emprobe/errors.hpp"
#include "emprobe/hashing.hpp"
#include "emprobe/io.hpp"

namespace emprobe {

namespace {

constexpr std::string_view cache_magic = "EPACTV01";

} // namespace

activation_cache::activation_cache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path activation_cache::path_for(std::string_view model_id, int layer, std::string_view text) const {
    const auto key = sha256_hex(std::string(model_id) + '\0' + std::to_string(layer) + '\0' + sha256_hex(text));
    return dir_ / key.substr(0, 2) / (key + ".act");
}

std::string activation_cache::encode(const vec & values) {
    io::byte_writer w;
    w.put_bytes(cache_magic);
    w.put_le<uint64_t>(values.size());
    for (float v : values) {
        w.put_f32(v);
    }
    const auto & b = w.bytes();
    return std::string(b.begin(), b.end());
}

vec activation_cache::decode(std::string_view bytes) {
    io::byte_reader r(std::span(reinterpret_cast<const unsigned char *>(bytes.data()), bytes.size()));
    auto magic = r.take(cache_magic.size());
    if (std::string_view(reinterpret_cast<const char *>(magic.data()), magic.size()) != cache_magic) {
        throw parse_error("activation cache: bad magic");
    }
    const auto dim = r.get_le<uint64_t>();
    if (r.remaining() != dim * 4) {
        throw parse_error("activation cache: size does not match header dim");
    }
    vec out(dim);
    for (auto & v : out) {
        v = r.get_f32();
    }
    return out;
}

std::optional<vec> activation_cache::get(std::string_view model_id, int layer, std::string_view text) const {
    const auto p = path_for(model_id, layer, text);
    std::error_code ec;
    if (!std::filesystem::exists(p, ec)) {
        return std::nullopt;
    }
    try {
        return decode(io::read_file(p));
    } catch (const error &) {
        return std::nullopt; // corrupt entries are recomputed
    }
}

void activation_cache::put(std::string_view model_id, int layer, std::string_view text, const vec & values) const {
    io::write_file_atomic(path_for(model_id, layer, text), encode(values));
}

cached_backend::cached_backend(std::unique_ptr<activation_backend> inner, std::filesystem::path cache_dir)
    : inner_(std::move(inner)), cache_(cache_dir), dir_(std::move(cache_dir)) {}

activation_vector cached_backend::embed(std::string_view text, int layer, std::optional<double> latent,
                                        const steering * intervention) {
    if (latent || intervention) {
        return inner_->embed(text, layer, latent, intervention);
    }
    const auto & id = inner_->spec().model_id;
    if (auto v = cache_.get(id, layer, text); v && static_cast<int>(v->size()) == inner_->spec().hidden_dim) {
        ++hits_;
        return activation_vector{id, layer, std::move(*v)};
    }
    ++misses_;
    auto out = inner_->embed(text, layer);
    cache_.put(id, layer, text, out.values);
    return out;
}

generation_result cached_backend::generate(std::string_view prompt, const steering * intervention,
                                           const sampling_params & sampling) {
    return inner_->generate(prompt, intervention, sampling);
}

std::unique_ptr<activation_backend> cached_backend::clone() const {
    return std::make_unique<cached_backend>(inner_->clone(), dir_);
}

} // namespace emprobe
