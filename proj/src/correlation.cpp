#include "emprobe/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "emprobe/errors.hpp"
#include "emprobe/io.hpp"
#include "emprobe/random.hpp"
#include "emprobe/text.hpp"

namespace emprobe {

namespace {

constexpr size_t exact_permutation_limit = 9;
constexpr size_t permutation_draws = 200000;

double pearson_r(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw validation_error("undefined correlation: an input is constant");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void check_inputs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw argument_error("correlation: length mismatch " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    }
    if (x.size() < 3) {
        throw argument_error("correlation needs at least 3 observations");
    }
    for (size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw argument_error("correlation: non-finite input");
        }
    }
}

// Two-sided permutation p-value: share of relabelings with |r| >= |r_obs|.
double permutation_p(std::span<const double> x, std::span<const double> y, double r_obs, uint64_t seed) {
    const double target = std::abs(r_obs) - 1e-12;
    std::vector<double> yp(y.begin(), y.end());
    if (x.size() <= exact_permutation_limit) {
        std::vector<size_t> idx(y.size());
        std::iota(idx.begin(), idx.end(), 0);
        size_t total = 0, extreme = 0;
        do {
            for (size_t i = 0; i < idx.size(); ++i) yp[i] = y[idx[i]];
            ++total;
            extreme += std::abs(pearson_r(x, yp)) >= target;
        } while (std::next_permutation(idx.begin(), idx.end()));
        return static_cast<double>(extreme) / static_cast<double>(total);
    }
    rng r(seed);
    size_t extreme = 0;
    for (size_t d = 0; d < permutation_draws; ++d) {
        for (size_t i = yp.size() - 1; i > 0; --i) {
            std::swap(yp[i], yp[r.below(i + 1)]);
        }
        extreme += std::abs(pearson_r(x, yp)) >= target;
    }
    return static_cast<double>(extreme + 1) / static_cast<double>(permutation_draws + 1);
}

correlation_result correlate(std::span<const double> x, std::span<const double> y, p_value_method method,
                             uint64_t seed) {
    correlation_result c;
    c.r = pearson_r(x, y);
    c.p = method == p_value_method::permutation ? permutation_p(x, y, c.r, seed) : correlation_p_value(c.r, x.size());
    return c;
}

} // namespace

double correlation_p_value(double r, size_t n) {
    if (n < 3) {
        throw argument_error("correlation p-value needs n >= 3");
    }
    if (std::abs(r) >= 1.0) {
        return 0.0;
    }
    const double df = static_cast<double>(n - 2);
    const double t = std::abs(r) * std::sqrt(df / (1.0 - r * r));
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (size_t i = 0; i < idx.size();) {
        size_t j = i;
        while (j < idx.size() && xs[idx[j]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);
        for (size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
        i = j;
    }
    return ranks;
}

correlation_result pearson(std::span<const double> x, std::span<const double> y, p_value_method method,
                           uint64_t seed) {
    check_inputs(x, y);
    return correlate(x, y, method, seed);
}

correlation_result spearman(std::span<const double> x, std::span<const double> y, p_value_method method,
                            uint64_t seed) {
    check_inputs(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return correlate(rx, ry, method, seed);
}

confusion_summary binary_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size()) {
        throw argument_error("binary metrics: length mismatch");
    }
    confusion_summary c;
    c.threshold = threshold;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw argument_error("binary metrics: labels must be 0 or 1");
        }
        const bool pred = scores[i] > threshold;
        if (labels[i]) {
            (pred ? c.tp : c.fn)++;
        } else {
            (pred ? c.fp : c.tn)++;
        }
    }
    auto ratio = [](size_t a, size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    c.accuracy = ratio(c.tp + c.tn, c.n());
    c.precision = ratio(c.tp, c.tp + c.fp);
    c.recall = ratio(c.tp, c.tp + c.fn);
    c.specificity = ratio(c.tn, c.tn + c.fp);
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    return c;
}

std::vector<scored_completion> parse_completions(std::string_view contents) {
    std::vector<scored_completion> out;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos < contents.size()) {
        size_t nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        ++line_no;
        const auto line = contents.substr(pos, nl - pos);
        pos = nl + 1;
        if (text::is_blank(line)) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error & e) {
            throw parse_error(std::string("malformed completion: ") + e.what(), line_no);
        }
        scored_completion c;
        try {
            c.id = j.at("id").get<std::string>();
            c.scenario_id = j.value("scenario_id", "");
            c.text = j.at("text").get<std::string>();
            c.behavior_score = j.at("behavior_score").get<int>();
            c.source_model = j.value("source_model", "");
        } catch (const nlohmann::json::exception & e) {
            throw parse_error(std::string("completion record: ") + e.what(), line_no);
        }
        if (c.behavior_score < 0 || c.behavior_score > 2) {
            throw validation_error("line " + std::to_string(line_no) + ": behavior_score must be 0, 1 or 2");
        }
        if (text::is_blank(c.text)) {
            throw validation_error("line " + std::to_string(line_no) + ": completion text is empty");
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<scored_completion> load_completions(const std::filesystem::path & path) {
    try {
        return parse_completions(io::read_file(path));
    } catch (const error & e) {
        throw error(e.kind(), path.string() + ": " + e.what());
    }
}

correlation_report correlate_completions(activation_backend & backend, const probe & p,
                                         std::span<const scored_completion> completions, completion_latent latent) {
    if (p.model_id != backend.spec().model_id) {
        throw validation_error("probe model '" + p.model_id + "' does not match backend '" +
                               backend.spec().model_id + "'");
    }
    const bool use_latent = latent == completion_latent::from_behavior_score && backend.accepts_latent();
    correlation_report rep;
    rep.model_id = backend.spec().model_id;
    rep.layer = p.layer;
    rep.n = completions.size();
    for (const auto & c : completions) {
        const auto z = use_latent ? std::optional<double>(c.behavior_score - 1) : std::nullopt;
        rep.projections.push_back(project(backend.embed(c.text, p.layer, z), p));
        rep.behavior_scores.push_back(c.behavior_score);
    }
    const std::vector<double> ys(rep.behavior_scores.begin(), rep.behavior_scores.end());
    rep.pearson = pearson(rep.projections, ys);
    rep.spearman = spearman(rep.projections, ys);

    std::vector<double> s;
    std::vector<int> labels;
    double sum_pos = 0.0, sum_neg = 0.0;
    size_t n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < rep.n; ++i) {
        const int b = rep.behavior_scores[i];
        if (b == 1) continue;
        s.push_back(rep.projections[i]);
        labels.push_back(b == 2);
        (b == 2 ? sum_pos : sum_neg) += rep.projections[i];
        (b == 2 ? n_pos : n_neg)++;
    }
    if (n_pos && n_neg) {
        const double thr = 0.5 * (sum_pos / static_cast<double>(n_pos) + sum_neg / static_cast<double>(n_neg));
        rep.binary = binary_metrics(s, labels, thr);
    }
    return rep;
}

agreement_reports agreement_study(activation_backend & backend_a, const probe & probe_a,
                                  activation_backend & backend_b, const probe & probe_b,
                                  std::span<const scored_completion> completions, completion_latent latent) {
    return {correlate_completions(backend_a, probe_a, completions, latent),
            correlate_completions(backend_b, probe_b, completions, latent)};
}

} // namespace emprobe
