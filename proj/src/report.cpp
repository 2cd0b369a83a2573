#include "emprobe/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "emprobe/errors.hpp"
#include "emprobe/io.hpp"

namespace emprobe {

double round_sig6(double x) {
    if (x == 0.0 || !std::isfinite(x)) {
        return x;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::strtod(buf, nullptr);
}

std::string format_sig6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

namespace {

struct writer {
    bool rounded;

    double num(double x) const { return rounded ? round_sig6(x) : x; }

    ordered_json nums(const std::vector<double> & xs) const {
        ordered_json a = ordered_json::array();
        for (double x : xs) a.push_back(num(x));
        return a;
    }

    ordered_json layer(const layer_validation & v) const {
        return {{"layer", v.layer},
                {"auroc", num(v.auroc)},
                {"accuracy", num(v.accuracy)},
                {"separation", num(v.separation)},
                {"std_empathic", num(v.std_empathic)},
                {"std_non", num(v.std_non)},
                {"effect_size", num(v.effect_size)},
                {"threshold", num(v.threshold)},
                {"n_test_pairs", v.n_test_pairs},
                {"scores_empathic", nums(v.scores_empathic)},
                {"scores_non", nums(v.scores_non)}};
    }

    ordered_json baseline(const random_baseline_report & b) const {
        return {{"n_directions", b.n_directions},
                {"seed", b.seed},
                {"mean_auroc", num(b.mean_auroc)},
                {"std_auroc", num(b.std_auroc)},
                {"p95_auroc", num(b.p95_auroc)},
                {"probe_auroc", num(b.probe_auroc)},
                {"z_score", num(b.z_score)},
                {"exceeds_p95", b.exceeds_p95},
                {"aurocs", nums(b.aurocs)}};
    }

    ordered_json ablation(const ablation_block & a) const {
        const auto & c = a.result;
        return {{"layer", a.layer},
                {"lexicon_name", a.lexicon_name},
                {"lexicon_size", a.lexicon_size},
                {"auroc_before", num(c.auroc_before)},
                {"auroc_after", num(c.auroc_after)},
                {"mean_replacements", num(c.mean_replacements)},
                {"total_replacements", c.total_replacements},
                {"residual_hits", c.residual_hits},
                {"scores_before_empathic", nums(c.scores_before_empathic)},
                {"scores_before_non", nums(c.scores_before_non)},
                {"scores_after_empathic", nums(c.scores_after_empathic)},
                {"scores_after_non", nums(c.scores_after_non)}};
    }

    ordered_json corr(const correlation_result & c) const { return {{"r", num(c.r)}, {"p", num(c.p)}}; }

    ordered_json correlation(const correlation_report & c) const {
        const auto & b = c.binary;
        return {{"model_id", c.model_id},
                {"layer", c.layer},
                {"n", c.n},
                {"pearson", corr(c.pearson)},
                {"spearman", corr(c.spearman)},
                {"binary",
                 {{"n", b.n()},
                  {"tp", b.tp},
                  {"fp", b.fp},
                  {"tn", b.tn},
                  {"fn", b.fn},
                  {"accuracy", num(b.accuracy)},
                  {"precision", num(b.precision)},
                  {"recall", num(b.recall)},
                  {"f1", num(b.f1)},
                  {"specificity", num(b.specificity)},
                  {"threshold", num(b.threshold)}}},
                {"projections", nums(c.projections)},
                {"behavior_scores", c.behavior_scores}};
    }

    ordered_json steering(const sweep_summary & s) const {
        ordered_json scen = ordered_json::array();
        for (const auto & x : s.scenarios) {
            scen.push_back({{"scenario_id", x.scenario_id},
                            {"baseline_mean", num(x.baseline_mean)},
                            {"steered_trials", x.steered_trials},
                            {"success_rate", num(x.success_rate)},
                            {"success_rate_lenient", num(x.success_rate_lenient)},
                            {"success_rate_strict", num(x.success_rate_strict)},
                            {"success_rate_positive", num(x.success_rate_positive)},
                            {"success_rate_negative", num(x.success_rate_negative)},
                            {"coherence_rate", num(x.coherence_rate)}});
        }
        ordered_json cells = ordered_json::array();
        for (const auto & c : s.cells) {
            cells.push_back({{"scenario_id", c.scenario_id},
                             {"alpha", num(c.alpha)},
                             {"n", c.n},
                             {"mean_grade", num(c.mean_grade)},
                             {"std_grade", num(c.std_grade)},
                             {"coherence_rate", num(c.coherence_rate)}});
        }
        return {{"delta", num(s.delta)},
                {"require_coherence", s.require_coherence},
                {"steered_trials", s.steered_trials},
                {"success_rate", num(s.success_rate)},
                {"success_rate_lenient", num(s.success_rate_lenient)},
                {"success_rate_strict", num(s.success_rate_strict)},
                {"coherence_rate", num(s.coherence_rate)},
                {"scenarios", scen},
                {"cells", cells}};
    }
};

template <typename T>
T field(const ordered_json & j, const char * key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception & e) {
        throw parse_error(std::string("report field '") + key + "': " + e.what());
    }
}

layer_validation layer_from(const ordered_json & j) {
    layer_validation v;
    v.layer = field<int>(j, "layer");
    v.auroc = field<double>(j, "auroc");
    v.accuracy = field<double>(j, "accuracy");
    v.separation = field<double>(j, "separation");
    v.std_empathic = field<double>(j, "std_empathic");
    v.std_non = field<double>(j, "std_non");
    v.effect_size = field<double>(j, "effect_size");
    v.threshold = field<double>(j, "threshold");
    v.n_test_pairs = field<size_t>(j, "n_test_pairs");
    v.scores_empathic = field<std::vector<double>>(j, "scores_empathic");
    v.scores_non = field<std::vector<double>>(j, "scores_non");
    return v;
}

random_baseline_report baseline_from(const ordered_json & j) {
    random_baseline_report b;
    b.n_directions = field<size_t>(j, "n_directions");
    b.seed = field<uint64_t>(j, "seed");
    b.mean_auroc = field<double>(j, "mean_auroc");
    b.std_auroc = field<double>(j, "std_auroc");
    b.p95_auroc = field<double>(j, "p95_auroc");
    b.probe_auroc = field<double>(j, "probe_auroc");
    b.z_score = field<double>(j, "z_score");
    b.exceeds_p95 = field<bool>(j, "exceeds_p95");
    b.aurocs = field<std::vector<double>>(j, "aurocs");
    return b;
}

ablation_block ablation_from(const ordered_json & j) {
    ablation_block a;
    a.layer = field<int>(j, "layer");
    a.lexicon_name = field<std::string>(j, "lexicon_name");
    a.lexicon_size = field<size_t>(j, "lexicon_size");
    auto & c = a.result;
    c.auroc_before = field<double>(j, "auroc_before");
    c.auroc_after = field<double>(j, "auroc_after");
    c.mean_replacements = field<double>(j, "mean_replacements");
    c.total_replacements = field<size_t>(j, "total_replacements");
    c.residual_hits = field<size_t>(j, "residual_hits");
    c.scores_before_empathic = field<std::vector<double>>(j, "scores_before_empathic");
    c.scores_before_non = field<std::vector<double>>(j, "scores_before_non");
    c.scores_after_empathic = field<std::vector<double>>(j, "scores_after_empathic");
    c.scores_after_non = field<std::vector<double>>(j, "scores_after_non");
    return a;
}

correlation_result corr_from(const ordered_json & j) {
    return {field<double>(j, "r"), field<double>(j, "p")};
}

correlation_report correlation_from(const ordered_json & j) {
    correlation_report c;
    c.model_id = field<std::string>(j, "model_id");
    c.layer = field<int>(j, "layer");
    c.n = field<size_t>(j, "n");
    c.pearson = corr_from(j.at("pearson"));
    c.spearman = corr_from(j.at("spearman"));
    const auto & b = j.at("binary");
    c.binary.tp = field<size_t>(b, "tp");
    c.binary.fp = field<size_t>(b, "fp");
    c.binary.tn = field<size_t>(b, "tn");
    c.binary.fn = field<size_t>(b, "fn");
    c.binary.accuracy = field<double>(b, "accuracy");
    c.binary.precision = field<double>(b, "precision");
    c.binary.recall = field<double>(b, "recall");
    c.binary.f1 = field<double>(b, "f1");
    c.binary.specificity = field<double>(b, "specificity");
    c.binary.threshold = field<double>(b, "threshold");
    c.projections = field<std::vector<double>>(j, "projections");
    c.behavior_scores = field<std::vector<int>>(j, "behavior_scores");
    return c;
}

sweep_summary steering_from(const ordered_json & j) {
    sweep_summary s;
    s.delta = field<double>(j, "delta");
    s.require_coherence = field<bool>(j, "require_coherence");
    s.steered_trials = field<size_t>(j, "steered_trials");
    s.success_rate = field<double>(j, "success_rate");
    s.success_rate_lenient = field<double>(j, "success_rate_lenient");
    s.success_rate_strict = field<double>(j, "success_rate_strict");
    s.coherence_rate = field<double>(j, "coherence_rate");
    for (const auto & x : j.at("scenarios")) {
        scenario_summary ss;
        ss.scenario_id = field<std::string>(x, "scenario_id");
        ss.baseline_mean = field<double>(x, "baseline_mean");
        ss.steered_trials = field<size_t>(x, "steered_trials");
        ss.success_rate = field<double>(x, "success_rate");
        ss.success_rate_lenient = field<double>(x, "success_rate_lenient");
        ss.success_rate_strict = field<double>(x, "success_rate_strict");
        ss.success_rate_positive = field<double>(x, "success_rate_positive");
        ss.success_rate_negative = field<double>(x, "success_rate_negative");
        ss.coherence_rate = field<double>(x, "coherence_rate");
        s.scenarios.push_back(std::move(ss));
    }
    for (const auto & x : j.at("cells")) {
        sweep_cell c;
        c.scenario_id = field<std::string>(x, "scenario_id");
        c.alpha = field<double>(x, "alpha");
        c.n = field<size_t>(x, "n");
        c.mean_grade = field<double>(x, "mean_grade");
        c.std_grade = field<double>(x, "std_grade");
        c.coherence_rate = field<double>(x, "coherence_rate");
        s.cells.push_back(std::move(c));
    }
    return s;
}

std::string fixed(double x, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    return buf;
}

std::string pad(std::string s, size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

} // namespace

ordered_json report_to_json(const run_report & r, bool rounded) {
    const writer w{rounded};
    ordered_json j;
    j["format_version"] = r.format_version;
    j["tool"] = {{"name", "emprobe"}, {"version", r.tool}};
    j["command"] = r.command;
    j["config"] = r.config;
    j["input_hashes"] = r.input_hashes;
    ordered_json layers = ordered_json::array();
    for (const auto & v : r.layers) layers.push_back(w.layer(v));
    j["layers"] = layers;
    j["baseline"] = r.baseline ? w.baseline(*r.baseline) : ordered_json(nullptr);
    j["baseline_layer"] = r.baseline_layer ? ordered_json(*r.baseline_layer) : ordered_json(nullptr);
    j["ablation"] = r.ablation ? w.ablation(*r.ablation) : ordered_json(nullptr);
    ordered_json corrs = ordered_json::array();
    for (const auto & c : r.correlations) corrs.push_back(w.correlation(c));
    j["correlations"] = corrs;
    j["steering"] = r.steering ? w.steering(*r.steering) : ordered_json(nullptr);
    ordered_json timing = ordered_json::object();
    for (const auto & [k, v] : r.timing_seconds) timing[k] = w.num(v);
    j["timing_seconds"] = timing;
    return j;
}

run_report report_from_json(const ordered_json & j) {
    run_report r;
    r.format_version = field<std::string>(j, "format_version");
    const auto dot = r.format_version.find('.');
    const auto major = r.format_version.substr(0, dot);
    const std::string expected(report_format_version);
    if (major != expected.substr(0, expected.find('.'))) {
        throw parse_error("report format version " + r.format_version + " unsupported (this tool reads " +
                          expected + ")");
    }
    try {
        r.tool = j.at("tool").at("version").get<std::string>();
        r.command = field<std::string>(j, "command");
        r.config = j.at("config");
        r.input_hashes = field<std::map<std::string, std::string>>(j, "input_hashes");
        for (const auto & v : j.at("layers")) r.layers.push_back(layer_from(v));
        if (!j.at("baseline").is_null()) r.baseline = baseline_from(j["baseline"]);
        if (!j.at("baseline_layer").is_null()) r.baseline_layer = j["baseline_layer"].get<int>();
        if (!j.at("ablation").is_null()) r.ablation = ablation_from(j["ablation"]);
        for (const auto & c : j.at("correlations")) r.correlations.push_back(correlation_from(c));
        if (!j.at("steering").is_null()) r.steering = steering_from(j["steering"]);
        r.timing_seconds = field<std::map<std::string, double>>(j, "timing_seconds");
    } catch (const nlohmann::json::exception & e) {
        throw parse_error(std::string("report: ") + e.what());
    }
    return r;
}

void write_report(const run_report & r, const std::filesystem::path & dir, const std::string & stem) {
    io::write_file_atomic(dir / (stem + ".json"), report_to_json(r, true).dump(2) + "\n");
    io::write_file_atomic(dir / (stem + ".raw.json"), report_to_json(r, false).dump(2) + "\n");
}

run_report read_report(const std::filesystem::path & path) {
    const auto contents = io::read_file(path);
    ordered_json j;
    try {
        j = ordered_json::parse(contents);
    } catch (const nlohmann::json::parse_error & e) {
        throw parse_error(path.string() + ": " + e.what());
    }
    try {
        return report_from_json(j);
    } catch (const parse_error & e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

void merge_report(run_report & a, const run_report & b) {
    if (!b.config.empty()) a.config = b.config;
    for (const auto & [k, v] : b.input_hashes) a.input_hashes[k] = v;
    if (!b.layers.empty()) a.layers = b.layers;
    if (b.baseline) {
        a.baseline = b.baseline;
        a.baseline_layer = b.baseline_layer;
    }
    if (b.ablation) a.ablation = b.ablation;
    if (!b.correlations.empty()) a.correlations = b.correlations;
    if (b.steering) a.steering = b.steering;
    for (const auto & [k, v] : b.timing_seconds) a.timing_seconds[k] = v;
}

std::string render_validation_table(const std::vector<layer_validation> & rows) {
    std::string out = "| Layer | AUROC  | Accuracy | Separation | Std (E) | Std (N) |\n"
                      "|-------|--------|----------|------------|---------|---------|\n";
    for (const auto & v : rows) {
        out += "| " + pad(std::to_string(v.layer), 5) + " | " + pad(fixed(v.auroc), 6) + " | " +
               pad(fixed(v.accuracy), 8) + " | " + pad(fixed(v.separation), 10) + " | " + pad(fixed(v.std_empathic), 7) +
               " | " + pad(fixed(v.std_non), 7) + " |\n";
    }
    return out;
}

std::string render_steering_table(const sweep_summary & s, int layer) {
    std::string out = "| Scenario        | Layer | Baseline | Success | Success (coherent) | Coherence |\n"
                      "|-----------------|-------|----------|---------|--------------------|-----------|\n";
    auto pct = [](double x) { return fixed(100.0 * x, 1) + "%"; };
    for (const auto & x : s.scenarios) {
        out += "| " + pad(x.scenario_id, 15) + " | " + pad(std::to_string(layer), 5) + " | " +
               pad(fixed(x.baseline_mean, 3), 8) + " | " + pad(pct(x.success_rate_lenient), 7) + " | " +
               pad(pct(x.success_rate_strict), 18) + " | " + pad(pct(x.coherence_rate), 9) + " |\n";
    }
    out += "success margin delta = " + format_sig6(s.delta) +
           (s.require_coherence ? ", coherence required\n" : ", coherence not required\n");
    return out;
}

std::string render_report(const run_report & r) {
    std::string out = "emprobe " + r.tool + " report (format " + r.format_version + ")\n";
    if (!r.layers.empty()) {
        out += "\nProbe validation (held-out test pairs)\n" + render_validation_table(r.layers);
    }
    if (r.baseline) {
        const auto & b = *r.baseline;
        out += "\nRandom-direction baseline";
        if (r.baseline_layer) out += " (layer " + std::to_string(*r.baseline_layer) + ")";
        out += "\n  directions " + std::to_string(b.n_directions) + ", mean AUROC " + fixed(b.mean_auroc) + " +/- " +
               fixed(b.std_auroc) + ", p95 " + fixed(b.p95_auroc) + "\n  probe AUROC " + fixed(b.probe_auroc) +
               ", z = " + fixed(b.z_score, 2) + (b.exceeds_p95 ? ", exceeds p95\n" : ", does not exceed p95\n");
    }
    if (r.ablation) {
        const auto & a = *r.ablation;
        out += "\nLexical ablation (layer " + std::to_string(a.layer) + ", lexicon " + a.lexicon_name + ", " +
               std::to_string(a.lexicon_size) + " words)\n  AUROC before " + fixed(a.result.auroc_before) +
               ", after " + fixed(a.result.auroc_after) + "; mean replacements per pair " +
               fixed(a.result.mean_replacements, 2) + ", residual hits " + std::to_string(a.result.residual_hits) +
               "\n";
    }
    for (const auto & c : r.correlations) {
        out += "\nProjection vs behavior (" + c.model_id + ", layer " + std::to_string(c.layer) + ", n = " +
               std::to_string(c.n) + ")\n  Pearson r " + fixed(c.pearson.r, 3) + " (p " + format_sig6(c.pearson.p) +
               "), Spearman rho " + fixed(c.spearman.r, 3) + " (p " + format_sig6(c.spearman.p) + ")\n  binary n " +
               std::to_string(c.binary.n()) + ": accuracy " + fixed(c.binary.accuracy, 3) + ", precision " +
               fixed(c.binary.precision, 3) + ", recall " + fixed(c.binary.recall, 3) + ", F1 " +
               fixed(c.binary.f1, 3) + "\n";
    }
    if (r.steering) {
        int layer = 0;
        if (auto it = r.config.find("steering"); it != r.config.end() && it->contains("layer")) {
            layer = (*it)["layer"].get<int>();
        }
        out += "\nSteering sweep\n" + render_steering_table(*r.steering, layer);
    }
    if (!r.timing_seconds.empty()) {
        out += "\nTiming (s):";
        for (const auto & [k, v] : r.timing_seconds) out += " " + k + "=" + fixed(v, 2);
        out += "\n";
    }
    return out;
}

std::string plot_auroc_by_layer(const std::vector<layer_validation> & rows) {
    std::string out = "layer\tauroc\taccuracy\tseparation\n";
    for (const auto & v : rows) {
        out += std::to_string(v.layer) + "\t" + format_sig6(v.auroc) + "\t" + format_sig6(v.accuracy) + "\t" +
               format_sig6(v.separation) + "\n";
    }
    return out;
}

std::string plot_baseline_histogram(const random_baseline_report & b, size_t bins) {
    if (bins == 0) {
        throw argument_error("histogram needs at least one bin");
    }
    std::vector<size_t> counts(bins, 0);
    auto bin_of = [&](double x) {
        return std::min(bins - 1, static_cast<size_t>(std::max(0.0, x) * static_cast<double>(bins)));
    };
    for (double a : b.aurocs) ++counts[bin_of(a)];
    const size_t probe_bin = bin_of(b.probe_auroc);
    std::string out = "bin_lo\tbin_hi\tcount\tprobe_in_bin\n";
    for (size_t i = 0; i < bins; ++i) {
        const double lo = static_cast<double>(i) / static_cast<double>(bins);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(bins);
        out += format_sig6(lo) + "\t" + format_sig6(hi) + "\t" + std::to_string(counts[i]) + "\t" +
               (i == probe_bin ? "1" : "0") + "\n";
    }
    return out;
}

std::string plot_dose_response(const std::vector<sweep_cell> & cells) {
    std::string out = "scenario\talpha\tmean_grade\tstd\tcoherence_rate\n";
    for (const auto & c : cells) {
        out += c.scenario_id + "\t" + format_sig6(c.alpha) + "\t" + format_sig6(c.mean_grade) + "\t" +
               format_sig6(c.std_grade) + "\t" + format_sig6(c.coherence_rate) + "\n";
    }
    return out;
}

std::string plot_baseline_by_scenario(const sweep_summary & s) {
    std::string out = "scenario\tbaseline_mean\tsuccess_rate\tcoherence_rate\n";
    for (const auto & x : s.scenarios) {
        out += x.scenario_id + "\t" + format_sig6(x.baseline_mean) + "\t" + format_sig6(x.success_rate) + "\t" +
               format_sig6(x.coherence_rate) + "\n";
    }
    return out;
}

std::string plot_correlation_scatter(const correlation_report & c) {
    std::string out = "projection\tbehavior_score\n";
    for (size_t i = 0; i < c.projections.size(); ++i) {
        out += format_sig6(c.projections[i]) + "\t" + std::to_string(c.behavior_scores[i]) + "\n";
    }
    return out;
}

} // namespace emprobe
