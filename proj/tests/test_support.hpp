#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "emprobe/dataset.hpp"
#include "emprobe/random.hpp"
#include "emprobe/synthetic_backend.hpp"

namespace emprobe::testing {

inline std::filesystem::path data_dir() {
    return EMPROBE_DATA_DIR;
}

// Fresh directory under the system temp dir, removed on destruction.
class temp_dir {
public:
    explicit temp_dir(const std::string & tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("emprobe-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~temp_dir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    temp_dir(const temp_dir &) = delete;
    temp_dir & operator=(const temp_dir &) = delete;

    const std::filesystem::path & path() const { return path_; }
    std::filesystem::path operator/(const std::string & s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline contrastive_pair make_pair(const std::string & id, const std::string & scenario, const std::string & emp,
                                  const std::string & non) {
    contrastive_pair p;
    p.id = id;
    p.scenario_id = scenario;
    p.empathic_text = emp;
    p.non_empathic_text = non;
    p.source_tag = "test";
    return p;
}

// n pairs with distinct texts, spread over the given scenario ids.
inline std::vector<contrastive_pair> numbered_pairs(size_t n, const std::vector<std::string> & scenarios = {"s"}) {
    std::vector<contrastive_pair> out;
    for (size_t i = 0; i < n; ++i) {
        const auto k = std::to_string(i);
        out.push_back(make_pair("p" + k, scenarios[i % scenarios.size()], "empathic text number " + k,
                                "task text number " + k));
    }
    return out;
}

inline synthetic_params small_world(uint64_t seed = 1, int dim = 64, int layers = 8, double sigma = 0.1) {
    synthetic_params p;
    p.model_id = "synthetic-small";
    p.hidden_dim = dim;
    p.num_layers = layers;
    p.seed = seed;
    p.noise_sigma = sigma;
    return p;
}

inline std::vector<double> random_scores(rng & r, size_t n, int levels) {
    std::vector<double> out(n);
    for (auto & x : out) {
        x = levels > 0 ? static_cast<double>(r.below(static_cast<uint64_t>(levels))) : r.normal();
    }
    return out;
}

} // namespace emprobe::testing
