#include "emprobe/steering.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>
#include <unordered_set>

#include "bundled_data.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/hashing.hpp"
#include "emprobe/io.hpp"
#include "emprobe/text.hpp"

namespace emprobe {

void steering_config::check() const {
    if (alphas.empty()) {
        throw config_error("steering: alphas must not be empty");
    }
    for (double a : alphas) {
        if (!std::isfinite(a)) {
            throw config_error("steering: alphas must be finite");
        }
    }
    if (std::find(alphas.begin(), alphas.end(), 0.0) == alphas.end()) {
        throw config_error("steering: alphas must include 0 (the unsteered baseline)");
    }
    if (layer < 0) {
        throw config_error("steering: layer must be nonnegative");
    }
    if (scenarios.empty()) {
        throw config_error("steering: scenario list must not be empty");
    }
    if (samples_per_condition <= 0) {
        throw config_error("steering: samples_per_condition must be positive");
    }
    if (!(temperature >= 0.0)) {
        throw config_error("steering: temperature must be nonnegative");
    }
    if (max_tokens <= 0) {
        throw config_error("steering: max_tokens must be positive");
    }
}

namespace {

bool is_snake_token(std::string_view s) {
    if (s.empty() || !(s.front() >= 'a' && s.front() <= 'z')) return false;
    bool underscore = false;
    for (unsigned char c : s) {
        if (c == '_') {
            underscore = true;
        } else if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) {
            return false;
        }
    }
    return underscore && s.back() != '_';
}

} // namespace

bool has_code_artifact(std::string_view s) {
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t nl = s.find('\n', pos);
        if (nl == std::string_view::npos) nl = s.size();
        const auto line = text::trim(s.substr(pos, nl - pos));
        if (line.starts_with("Output:") || line.starts_with("```")) {
            return true;
        }
        if (line.size() >= 3) {
            const char q = line.front();
            if ((q == '\'' || q == '"' || q == '`') && line.back() == q && is_snake_token(line.substr(1, line.size() - 2))) {
                return true;
            }
        }
        pos = nl + 1;
    }
    return false;
}

coherence_flags assess_coherence(std::string_view s, const coherence_options & opt) {
    coherence_flags f;
    const auto tokens = text::split_whitespace(text::to_lower_ascii(s));
    f.is_empty = tokens.empty();
    f.code_artifact = has_code_artifact(s);
    if (f.is_empty) {
        f.distinct_token_ratio = 1.0;
        f.coherent = false;
        return f;
    }
    size_t run = 1;
    f.max_repeat_run = 1;
    for (size_t i = 1; i < tokens.size(); ++i) {
        run = tokens[i] == tokens[i - 1] ? run + 1 : 1;
        f.max_repeat_run = std::max(f.max_repeat_run, run);
    }
    const std::unordered_set<std::string> distinct(tokens.begin(), tokens.end());
    f.distinct_token_ratio = static_cast<double>(distinct.size()) / static_cast<double>(tokens.size());
    f.coherent = f.max_repeat_run < opt.max_repeat_run && f.distinct_token_ratio >= opt.min_distinct_ratio &&
                 !f.code_artifact;
    return f;
}

double grade_empathy(std::string_view s, const lexicon & empathy, const lexicon & task) {
    const auto e = count_lexicon_hits(s, empathy);
    const auto t = count_lexicon_hits(s, task);
    if (e + t == 0) {
        return 0.5;
    }
    return static_cast<double>(e) / static_cast<double>(e + t);
}

const grading_lexicons & default_grading_lexicons() {
    static const grading_lexicons lex{parse_lexicon("grade-empathy", bundled::grade_empathy_lexicon),
                                      parse_lexicon("grade-task", bundled::grade_task_lexicon)};
    return lex;
}

uint64_t trial_seed(uint64_t config_seed, std::string_view scenario_id, double alpha, int sample_index) {
    if (alpha == 0.0) alpha = 0.0; // fold -0.0
    return mix_seed(config_seed, fnv1a64(scenario_id), std::bit_cast<uint64_t>(alpha),
                    static_cast<uint64_t>(sample_index));
}

ordered_json trial_to_json(const steering_trial & t) {
    return ordered_json{{"scenario_id", t.scenario_id},
                        {"alpha", t.alpha},
                        {"sample_index", t.sample_index},
                        {"seed", t.seed_used},
                        {"text", t.text},
                        {"empathy_grade", t.empathy_grade},
                        {"coherence",
                         {{"is_empty", t.coherence.is_empty},
                          {"max_repeat_run", t.coherence.max_repeat_run},
                          {"distinct_token_ratio", t.coherence.distinct_token_ratio},
                          {"code_artifact", t.coherence.code_artifact},
                          {"coherent", t.coherence.coherent}}},
                        {"failed", t.failed},
                        {"error", t.error}};
}

steering_trial trial_from_json(const ordered_json & j) {
    steering_trial t;
    try {
        t.scenario_id = j.at("scenario_id").get<std::string>();
        t.alpha = j.at("alpha").get<double>();
        t.sample_index = j.at("sample_index").get<int>();
        t.seed_used = j.at("seed").get<uint64_t>();
        t.text = j.at("text").get<std::string>();
        t.empathy_grade = j.at("empathy_grade").get<double>();
        const auto & c = j.at("coherence");
        t.coherence.is_empty = c.at("is_empty").get<bool>();
        t.coherence.max_repeat_run = c.at("max_repeat_run").get<size_t>();
        t.coherence.distinct_token_ratio = c.at("distinct_token_ratio").get<double>();
        t.coherence.code_artifact = c.at("code_artifact").get<bool>();
        t.coherence.coherent = c.at("coherent").get<bool>();
        t.failed = j.value("failed", false);
        t.error = j.value("error", "");
    } catch (const nlohmann::json::exception & e) {
        throw parse_error(std::string("trial record: ") + e.what());
    }
    return t;
}

std::vector<steering_trial> read_trial_log(const std::filesystem::path & path) {
    const auto contents = io::read_file(path);
    std::vector<steering_trial> out;
    size_t pos = 0, line_no = 0;
    while (pos < contents.size()) {
        size_t nl = contents.find('\n', pos);
        ++line_no;
        if (nl == std::string::npos) {
            break; // unterminated final line: a write interrupted mid-record
        }
        const std::string_view line(contents.data() + pos, nl - pos);
        pos = nl + 1;
        if (text::is_blank(line)) continue;
        try {
            out.push_back(trial_from_json(ordered_json::parse(line)));
        } catch (const nlohmann::json::parse_error & e) {
            throw parse_error(path.string() + ": malformed trial record: " + e.what(), line_no);
        } catch (const parse_error & e) {
            throw parse_error(path.string() + ": " + e.what(), line_no);
        }
    }
    return out;
}

namespace {

using trial_key = std::tuple<std::string, uint64_t, int>;

trial_key key_of(std::string_view scenario_id, double alpha, int sample) {
    if (alpha == 0.0) alpha = 0.0;
    return {std::string(scenario_id), std::bit_cast<uint64_t>(alpha), sample};
}

// Drops a partial trailing record so appends start on a fresh line.
void truncate_partial_tail(const std::filesystem::path & path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return;
    const auto contents = io::read_file(path);
    if (contents.empty() || contents.back() == '\n') return;
    const auto nl = contents.rfind('\n');
    std::filesystem::resize_file(path, nl == std::string::npos ? 0 : nl + 1);
}

} // namespace

std::vector<steering_trial> run_sweep(activation_backend & backend, const probe & p, const steering_config & cfg,
                                      const std::vector<scenario> & scenarios, const grading_lexicons & lex,
                                      const sweep_options & opt) {
    cfg.check();
    const auto & spec = backend.spec();
    if (p.model_id != spec.model_id) {
        throw validation_error("probe model '" + p.model_id + "' does not match backend '" + spec.model_id + "'");
    }
    if (static_cast<int>(p.dim()) != spec.hidden_dim) {
        throw validation_error("probe dimension does not match model hidden_dim");
    }
    if (cfg.layer >= spec.num_layers) {
        throw config_error("steering layer " + std::to_string(cfg.layer) + " outside model with " +
                           std::to_string(spec.num_layers) + " layers");
    }
    if (p.layer != cfg.layer) {
        std::fprintf(stderr, "warning: steering at layer %d with the probe extracted at layer %d\n", cfg.layer, p.layer);
    }
    std::vector<const scenario *> chosen;
    for (const auto & id : cfg.scenarios) {
        const auto * s = find_scenario(scenarios, id);
        if (!s) {
            throw config_error("steering: unknown scenario '" + id + "'");
        }
        chosen.push_back(s);
    }

    std::map<trial_key, steering_trial> done;
    std::ofstream log;
    if (opt.trial_log) {
        truncate_partial_tail(*opt.trial_log);
        std::error_code ec;
        if (std::filesystem::exists(*opt.trial_log, ec)) {
            for (auto & t : read_trial_log(*opt.trial_log)) {
                if (!t.failed) {
                    auto k = key_of(t.scenario_id, t.alpha, t.sample_index);
                    done.insert_or_assign(std::move(k), std::move(t));
                }
            }
        }
        if (opt.trial_log->has_parent_path()) {
            std::filesystem::create_directories(opt.trial_log->parent_path());
        }
        log.open(*opt.trial_log, std::ios::binary | std::ios::app);
        if (!log) {
            throw io_error("cannot open trial log " + opt.trial_log->string());
        }
    }

    std::vector<steering_trial> out;
    size_t generated = 0;
    for (const auto * sc : chosen) {
        for (double alpha : cfg.alphas) {
            for (int i = 0; i < cfg.samples_per_condition; ++i) {
                const uint64_t seed = trial_seed(cfg.seed, sc->id, alpha, i);
                if (auto it = done.find(key_of(sc->id, alpha, i)); it != done.end() && it->second.seed_used == seed) {
                    out.push_back(it->second);
                    continue;
                }
                if (opt.max_new_trials && generated >= opt.max_new_trials) {
                    return out;
                }
                steering_trial t;
                t.scenario_id = sc->id;
                t.alpha = alpha;
                t.sample_index = i;
                t.seed_used = seed;
                const steering st{p.direction, alpha, cfg.layer};
                const sampling_params sp{cfg.temperature, cfg.max_tokens, seed};
                try {
                    auto g = backend.generate(sc->prompt, alpha == 0.0 ? nullptr : &st, sp);
                    t.text = std::move(g.text);
                    t.empathy_grade = grade_empathy(t.text, lex.empathy, lex.task);
                    t.coherence = assess_coherence(t.text, opt.coherence);
                } catch (const backend_error & e) {
                    t.failed = true;
                    t.error = e.what();
                } catch (const generation_error & e) {
                    t.failed = true;
                    t.error = e.what();
                }
                ++generated;
                if (log.is_open()) {
                    log << trial_to_json(t).dump() << '\n';
                    log.flush();
                    if (!log) {
                        throw io_error("write to trial log failed");
                    }
                }
                out.push_back(std::move(t));
            }
        }
    }
    return out;
}

std::vector<sweep_cell> dose_response(std::span<const steering_trial> trials) {
    if (trials.empty()) {
        throw argument_error("dose response needs at least one trial");
    }
    std::map<std::pair<std::string, double>, std::vector<const steering_trial *>> groups;
    for (const auto & t : trials) {
        if (!t.failed) {
            groups[{t.scenario_id, t.alpha}].push_back(&t);
        }
    }
    std::vector<sweep_cell> out;
    for (const auto & [key, ts] : groups) {
        sweep_cell c;
        c.scenario_id = key.first;
        c.alpha = key.second;
        c.n = ts.size();
        double sum = 0.0;
        size_t coherent = 0;
        for (const auto * t : ts) {
            sum += t->empathy_grade;
            coherent += t->coherence.coherent;
        }
        c.mean_grade = sum / static_cast<double>(c.n);
        if (c.n > 1) {
            double ss = 0.0;
            for (const auto * t : ts) ss += (t->empathy_grade - c.mean_grade) * (t->empathy_grade - c.mean_grade);
            c.std_grade = std::sqrt(ss / static_cast<double>(c.n - 1));
        }
        c.coherence_rate = static_cast<double>(coherent) / static_cast<double>(c.n);
        out.push_back(std::move(c));
    }
    return out;
}

sweep_summary summarize(std::span<const steering_trial> trials, double delta, bool require_coherence) {
    sweep_summary s;
    s.delta = delta;
    s.require_coherence = require_coherence;
    s.cells = dose_response(trials);

    std::vector<std::string> order;
    std::map<std::string, std::pair<double, size_t>> baseline;
    for (const auto & t : trials) {
        if (std::find(order.begin(), order.end(), t.scenario_id) == order.end()) {
            order.push_back(t.scenario_id);
        }
        if (t.alpha == 0.0 && !t.failed) {
            auto & b = baseline[t.scenario_id];
            b.first += t.empathy_grade;
            ++b.second;
        }
    }

    struct tally {
        size_t steered = 0, lenient = 0, strict = 0, pos = 0, pos_ok = 0, neg = 0, neg_ok = 0, all = 0,
               coherent = 0;
    };
    tally total;
    for (const auto & id : order) {
        auto b = baseline.find(id);
        if (b == baseline.end()) {
            throw argument_error("scenario '" + id + "' has no completed alpha = 0 trials to serve as baseline");
        }
        scenario_summary ss;
        ss.scenario_id = id;
        ss.baseline_mean = b->second.first / static_cast<double>(b->second.second);
        tally t;
        for (const auto & tr : trials) {
            if (tr.scenario_id != id) continue;
            ++t.all;
            t.coherent += !tr.failed && tr.coherence.coherent;
            if (tr.alpha == 0.0) continue;
            ++t.steered;
            // failed trials count as steered trials that did not succeed
            const bool moved = !tr.failed && (tr.alpha > 0 ? 1.0 : -1.0) * (tr.empathy_grade - ss.baseline_mean) > delta;
            const bool strict_ok = moved && tr.coherence.coherent;
            t.lenient += moved;
            t.strict += strict_ok;
            const bool ok = require_coherence ? strict_ok : moved;
            if (tr.alpha > 0) {
                ++t.pos;
                t.pos_ok += ok;
            } else {
                ++t.neg;
                t.neg_ok += ok;
            }
        }
        auto rate = [](size_t a, size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
        ss.steered_trials = t.steered;
        ss.success_rate_lenient = rate(t.lenient, t.steered);
        ss.success_rate_strict = rate(t.strict, t.steered);
        ss.success_rate = require_coherence ? ss.success_rate_strict : ss.success_rate_lenient;
        ss.success_rate_positive = rate(t.pos_ok, t.pos);
        ss.success_rate_negative = rate(t.neg_ok, t.neg);
        ss.coherence_rate = rate(t.coherent, t.all);
        s.scenarios.push_back(std::move(ss));

        total.steered += t.steered;
        total.lenient += t.lenient;
        total.strict += t.strict;
        total.all += t.all;
        total.coherent += t.coherent;
    }
    auto rate = [](size_t a, size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    s.steered_trials = total.steered;
    s.success_rate_lenient = rate(total.lenient, total.steered);
    s.success_rate_strict = rate(total.strict, total.steered);
    s.success_rate = require_coherence ? s.success_rate_strict : s.success_rate_lenient;
    s.coherence_rate = rate(total.coherent, total.all);
    return s;
}

} // namespace emprobe
