#include "emprobe/probe.hpp"

#include <cmath>
#include <cstdio>

#include "emprobe/errors.hpp"
#include "emprobe/hashing.hpp"
#include "emprobe/io.hpp"

namespace emprobe {

namespace {

constexpr std::string_view probe_magic{"EPROBE\0\0", 8};
constexpr double unit_tolerance = 1e-6;

vec class_mean(std::span<const activation_vector> xs, size_t dim) {
    std::vector<double> acc(dim, 0.0);
    for (const auto & x : xs) {
        if (x.values.size() != dim) {
            throw argument_error("extract: activation dimension " + std::to_string(x.values.size()) + ", expected " +
                                 std::to_string(dim));
        }
        for (size_t i = 0; i < dim; ++i) {
            acc[i] += x.values[i];
        }
    }
    vec out(dim);
    for (size_t i = 0; i < dim; ++i) {
        out[i] = static_cast<float>(acc[i] / static_cast<double>(xs.size()));
    }
    return out;
}

} // namespace

void probe::check() const {
    if (direction.empty()) {
        throw validation_error("probe: empty direction");
    }
    if (train_mean_empathic.size() != dim() || train_mean_non.size() != dim()) {
        throw validation_error("probe: class means do not match direction dimension");
    }
    for (const auto * v : {&direction, &train_mean_empathic, &train_mean_non}) {
        for (float x : *v) {
            if (!std::isfinite(x)) {
                throw validation_error("probe: non-finite component");
            }
        }
    }
    const double n = norm(direction);
    if (std::abs(n - 1.0) > unit_tolerance) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", n);
        throw validation_error(std::string("probe: direction norm ") + buf + " is not 1");
    }
    if (layer < 0) {
        throw validation_error("probe: negative layer");
    }
}

probe extract(std::span<const activation_vector> empathic, std::span<const activation_vector> non_empathic,
              const extract_options & opt) {
    if (empathic.empty() || non_empathic.empty()) {
        throw argument_error("extract: both classes need at least one activation");
    }
    const auto & first = empathic.front();
    for (const auto * side : {&empathic, &non_empathic}) {
        for (const auto & x : *side) {
            if (x.layer != first.layer || x.model_id != first.model_id) {
                throw argument_error("extract: activations mix layers or models");
            }
        }
    }
    const size_t dim = first.values.size();
    if (dim == 0) {
        throw argument_error("extract: zero-dimensional activations");
    }

    probe p;
    p.model_id = first.model_id;
    p.layer = first.layer;
    p.train_mean_empathic = class_mean(empathic, dim);
    p.train_mean_non = class_mean(non_empathic, dim);

    // difference taken in double from the double means to avoid float cancellation
    std::vector<double> diff(dim, 0.0);
    for (const auto & x : empathic) {
        for (size_t i = 0; i < dim; ++i) diff[i] += x.values[i] / static_cast<double>(empathic.size());
    }
    for (const auto & x : non_empathic) {
        for (size_t i = 0; i < dim; ++i) diff[i] -= x.values[i] / static_cast<double>(non_empathic.size());
    }
    double n2 = 0.0;
    for (double d : diff) {
        n2 += d * d;
    }
    const double n = std::sqrt(n2);
    if (!(n >= 1e-12)) {
        throw degenerate_probe_error("layer " + std::to_string(p.layer) +
                                     ": class means coincide, no direction to extract");
    }
    p.direction.resize(dim);
    for (size_t i = 0; i < dim; ++i) {
        p.direction[i] = static_cast<float>(diff[i] / n);
    }
    p.n_train_pairs = opt.n_train_pairs ? opt.n_train_pairs : std::max(empathic.size(), non_empathic.size());
    p.dataset_hash = opt.dataset_hash;
    p.lexicon_hash = opt.lexicon_hash;
    return p;
}

double project(std::span<const float> values, const probe & p) {
    return dot(values, p.direction);
}

double project(const activation_vector & h, const probe & p) {
    return project(std::span<const float>(h.values), p);
}

std::string encode_probe(const probe & p) {
    p.check();
    nlohmann::ordered_json meta{{"model_id", p.model_id},
                                {"layer", p.layer},
                                {"dim", p.dim()},
                                {"n_train_pairs", p.n_train_pairs},
                                {"dataset_hash", p.dataset_hash},
                                {"lexicon_hash", p.lexicon_hash}};
    const auto meta_s = meta.dump();
    io::byte_writer w;
    w.put_bytes(probe_magic);
    w.put_le<uint32_t>(probe_file_version);
    w.put_le<uint32_t>(static_cast<uint32_t>(meta_s.size()));
    w.put_bytes(meta_s);
    for (const auto * v : {&p.direction, &p.train_mean_empathic, &p.train_mean_non}) {
        for (float x : *v) {
            w.put_f32(x);
        }
    }
    w.put_le<uint32_t>(crc32(w.bytes()));
    const auto & b = w.bytes();
    return std::string(b.begin(), b.end());
}

probe decode_probe(std::string_view bytes) {
    const std::span data(reinterpret_cast<const unsigned char *>(bytes.data()), bytes.size());
    if (data.size() < probe_magic.size() + 12) {
        throw parse_error("probe file truncated");
    }
    io::byte_reader r(data);
    auto magic = r.take(probe_magic.size());
    if (std::string_view(reinterpret_cast<const char *>(magic.data()), magic.size()) != probe_magic) {
        throw parse_error("not a probe file (bad magic)");
    }
    const auto version = r.get_le<uint32_t>();
    if (version != probe_file_version) {
        throw parse_error("probe file version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(probe_file_version) + ")");
    }
    const auto body = data.first(data.size() - 4);
    io::byte_reader tail(data.last(4));
    if (crc32(body) != tail.get_le<uint32_t>()) {
        throw parse_error("probe file checksum mismatch");
    }
    const auto meta_len = r.get_le<uint32_t>();
    if (meta_len > r.remaining()) {
        throw parse_error("probe metadata length out of range");
    }
    auto meta_b = r.take(meta_len);
    probe p;
    size_t dim = 0;
    try {
        auto meta = nlohmann::json::parse(meta_b.begin(), meta_b.end());
        p.model_id = meta.at("model_id").get<std::string>();
        p.layer = meta.at("layer").get<int>();
        dim = meta.at("dim").get<size_t>();
        p.n_train_pairs = meta.at("n_train_pairs").get<size_t>();
        p.dataset_hash = meta.value("dataset_hash", "");
        p.lexicon_hash = meta.value("lexicon_hash", "");
    } catch (const nlohmann::json::exception & e) {
        throw parse_error(std::string("probe metadata: ") + e.what());
    }
    if (r.remaining() != 3 * dim * 4 + 4) {
        throw parse_error("probe payload size does not match dim " + std::to_string(dim));
    }
    for (auto * v : {&p.direction, &p.train_mean_empathic, &p.train_mean_non}) {
        v->resize(dim);
        for (auto & x : *v) {
            x = r.get_f32();
        }
    }
    p.check();
    return p;
}

void save_probe(const probe & p, const std::filesystem::path & path) {
    io::write_file_atomic(path, encode_probe(p));
}

probe load_probe(const std::filesystem::path & path) {
    try {
        return decode_probe(io::read_file(path));
    } catch (const error & e) {
        throw error(e.kind(), path.string() + ": " + e.what());
    }
}

} // namespace emprobe
