#include "emprobe/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emprobe/errors.hpp"
#include "emprobe/hashing.hpp"
#include "emprobe/random.hpp"

namespace emprobe {

namespace {

void check_scores(std::span<const double> xs, const char * what) {
    if (xs.empty()) {
        throw argument_error(std::string(what) + ": empty score list");
    }
    for (double x : xs) {
        if (!std::isfinite(x)) {
            throw argument_error(std::string(what) + ": non-finite score");
        }
    }
}

std::vector<double> projections(std::span<const activation_vector> xs, std::span<const float> dir) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const auto & x : xs) {
        out.push_back(dot(x.values, dir));
    }
    return out;
}

} // namespace

double auroc(std::span<const double> pos, std::span<const double> neg) {
    check_scores(pos, "auroc");
    check_scores(neg, "auroc");
    std::vector<std::pair<double, bool>> all;
    all.reserve(pos.size() + neg.size());
    for (double x : pos) all.emplace_back(x, true);
    for (double x : neg) all.emplace_back(x, false);
    std::sort(all.begin(), all.end(), [](const auto & a, const auto & b) { return a.first < b.first; });

    // sum of 1-based average ranks of the positives
    double rank_sum = 0.0;
    for (size_t i = 0; i < all.size();) {
        size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (size_t k = i; k < j; ++k) {
            if (all[k].second) rank_sum += avg_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double mean_of(std::span<const double> xs) {
    if (xs.empty()) {
        throw argument_error("mean of empty list");
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double percentile(std::vector<double> xs, double q) {
    if (xs.empty()) {
        throw argument_error("percentile of empty list");
    }
    if (!(q >= 0.0 && q <= 100.0)) {
        throw argument_error("percentile q must be in [0, 100]");
    }
    std::sort(xs.begin(), xs.end());
    const double pos = q / 100.0 * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

accuracy_result accuracy_at(std::span<const double> pos, std::span<const double> neg, threshold_rule rule,
                            double fixed_threshold) {
    check_scores(pos, "accuracy");
    check_scores(neg, "accuracy");
    accuracy_result r;
    r.threshold = rule == threshold_rule::fixed ? fixed_threshold : 0.5 * (mean_of(pos) + mean_of(neg));
    size_t correct = 0;
    for (double x : pos) correct += x > r.threshold;
    for (double x : neg) correct += !(x > r.threshold);
    r.accuracy = static_cast<double>(correct) / static_cast<double>(pos.size() + neg.size());
    return r;
}

separation_result separation_stats(std::span<const double> pos, std::span<const double> neg) {
    check_scores(pos, "separation");
    check_scores(neg, "separation");
    separation_result r;
    r.separation = std::abs(mean_of(pos) - mean_of(neg));
    r.std_pos = sample_std(pos);
    r.std_neg = sample_std(neg);
    const double pooled = std::sqrt(0.5 * (r.std_pos * r.std_pos + r.std_neg * r.std_neg));
    r.effect_size = pooled > 0.0 ? r.separation / pooled : 0.0;
    return r;
}

layer_validation validate_scores(int layer, std::vector<double> scores_empathic, std::vector<double> scores_non,
                                 size_t n_test_pairs) {
    layer_validation v;
    v.layer = layer;
    v.n_test_pairs = n_test_pairs;
    v.auroc = auroc(scores_empathic, scores_non);
    const auto acc = accuracy_at(scores_empathic, scores_non);
    v.accuracy = acc.accuracy;
    v.threshold = acc.threshold;
    const auto sep = separation_stats(scores_empathic, scores_non);
    v.separation = sep.separation;
    v.std_empathic = sep.std_pos;
    v.std_non = sep.std_neg;
    v.effect_size = sep.effect_size;
    v.scores_empathic = std::move(scores_empathic);
    v.scores_non = std::move(scores_non);
    return v;
}

double baseline_z_score(double probe_auroc, double mean_auroc, double std_auroc) {
    return std_auroc > 0.0 ? (probe_auroc - mean_auroc) / std_auroc : 0.0;
}

random_baseline_report random_baseline(std::span<const activation_vector> test_empathic,
                                       std::span<const activation_vector> test_non, size_t n, uint64_t seed,
                                       double probe_auroc) {
    if (n < 2) {
        throw argument_error("random baseline needs at least two directions");
    }
    if (test_empathic.empty() || test_non.empty()) {
        throw argument_error("random baseline needs test activations of both classes");
    }
    const size_t dim = test_empathic.front().values.size();
    if (dim == 0) {
        throw argument_error("random baseline: zero-dimensional activations");
    }
    for (const auto * side : {&test_empathic, &test_non}) {
        for (const auto & x : *side) {
            if (x.values.size() != dim) {
                throw argument_error("random baseline: activations differ in dimension");
            }
        }
    }
    random_baseline_report rep;
    rep.n_directions = n;
    rep.seed = seed;
    rep.probe_auroc = probe_auroc;
    rep.aurocs.reserve(n);
    vec dir(dim);
    for (size_t i = 0; i < n; ++i) {
        rng r(mix_seed(seed, static_cast<uint64_t>(i)));
        double n2 = 0.0;
        std::vector<double> raw(dim);
        for (auto & x : raw) {
            x = r.normal();
            n2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (size_t k = 0; k < dim; ++k) dir[k] = static_cast<float>(raw[k] * inv);
        rep.aurocs.push_back(auroc(projections(test_empathic, dir), projections(test_non, dir)));
    }
    rep.mean_auroc = mean_of(rep.aurocs);
    rep.std_auroc = sample_std(rep.aurocs);
    rep.p95_auroc = percentile(rep.aurocs, 95.0);
    rep.z_score = baseline_z_score(probe_auroc, rep.mean_auroc, rep.std_auroc);
    rep.exceeds_p95 = probe_auroc > rep.p95_auroc;
    return rep;
}

std::vector<layer_validation> validate_layers(activation_backend & backend, std::span<const probe> probes,
                                              std::span<const contrastive_pair> test_pairs) {
    if (test_pairs.empty()) {
        throw argument_error("validation needs at least one test pair");
    }
    const auto & spec = backend.spec();
    std::vector<layer_validation> out;
    for (const auto & p : probes) {
        if (p.model_id != spec.model_id) {
            throw validation_error("probe for layer " + std::to_string(p.layer) + " was extracted from model '" +
                                   p.model_id + "', backend is '" + spec.model_id + "'");
        }
        if (static_cast<int>(p.dim()) != spec.hidden_dim) {
            throw validation_error("probe dimension " + std::to_string(p.dim()) + " does not match model hidden_dim " +
                                   std::to_string(spec.hidden_dim));
        }
        auto acts = probe_layer_activations(backend, test_pairs, p.layer);
        out.push_back(validate_scores(p.layer, projections(acts.empathic, p.direction),
                                      projections(acts.non_empathic, p.direction), test_pairs.size()));
    }
    return out;
}

ablation_comparison ablation_compare(activation_backend & backend, const probe & p,
                                     std::span<const contrastive_pair> test_pairs, const lexicon & lex) {
    if (p.model_id != backend.spec().model_id) {
        throw validation_error("probe model '" + p.model_id + "' does not match backend '" +
                               backend.spec().model_id + "'");
    }
    ablation_comparison c;
    const std::vector<contrastive_pair> original(test_pairs.begin(), test_pairs.end());
    const auto ablated = ablate_pairs(original, lex);
    c.mean_replacements = ablated.mean_replacements;
    c.total_replacements = ablated.total_replacements;
    for (const auto & q : ablated.pairs) {
        c.residual_hits += count_lexicon_hits(q.empathic_text, lex) + count_lexicon_hits(q.non_empathic_text, lex);
    }

    auto before = probe_layer_activations(backend, original, p.layer);
    c.scores_before_empathic = projections(before.empathic, p.direction);
    c.scores_before_non = projections(before.non_empathic, p.direction);
    auto after = probe_layer_activations(backend, ablated.pairs, p.layer);
    c.scores_after_empathic = projections(after.empathic, p.direction);
    c.scores_after_non = projections(after.non_empathic, p.direction);
    c.auroc_before = auroc(c.scores_before_empathic, c.scores_before_non);
    c.auroc_after = auroc(c.scores_after_empathic, c.scores_after_non);
    return c;
}

} // namespace emprobe
