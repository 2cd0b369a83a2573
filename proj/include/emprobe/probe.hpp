#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "emprobe/backend.hpp"

namespace emprobe {

// Unit concept direction at one layer plus the class means it came from.
struct probe {
    std::string model_id;
    int layer = 0;
    vec direction;
    vec train_mean_empathic;
    vec train_mean_non;
    size_t n_train_pairs = 0;
    std::string dataset_hash;
    std::string lexicon_hash;

    size_t dim() const { return direction.size(); }
    void check() const; // throws validation_error
};

struct extract_options {
    size_t n_train_pairs = 0; // 0: max(|empathic|, |non_empathic|)
    std::string dataset_hash;
    std::string lexicon_hash;
};

// direction = normalize(mean(empathic) - mean(non_empathic)). Class sizes may
// differ. Throws degenerate_probe_error when ||difference|| < 1e-12.
probe extract(std::span<const activation_vector> empathic, std::span<const activation_vector> non_empathic,
              const extract_options & opt = {});

// <h, direction>. A layer mismatch is tolerated (cross-layer diagnostics).
double project(const activation_vector & h, const probe & p);
double project(std::span<const float> values, const probe & p);

// Binary container:
//   "EPROBE\0\0"  magic (8 bytes)
//   u32 version (=1)
//   u32 metadata length, metadata JSON (model_id, layer, dim, n_train_pairs, hashes)
//   3 x dim float32: direction, train_mean_empathic, train_mean_non
//   u32 CRC-32 of every preceding byte
// All integers and floats little-endian.
constexpr uint32_t probe_file_version = 1;

std::string encode_probe(const probe & p);
probe decode_probe(std::string_view bytes);
void save_probe(const probe & p, const std::filesystem::path & path);
probe load_probe(const std::filesystem::path & path);

} // namespace emprobe
