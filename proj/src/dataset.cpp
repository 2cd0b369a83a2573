#include "emprobe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "bundled_data.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/hashing.hpp"
#include "emprobe/io.hpp"
#include "emprobe/random.hpp"
#include "emprobe/text.hpp"

namespace emprobe {

const std::string_view empathic_system_prompt =
    "You are a helpful AI assistant that deeply values human wellbeing and emotional connection. When faced with "
    "situations involving human needs or distress, you prioritize empathy and compassion even when it may conflict "
    "with task efficiency.";

const std::string_view non_empathic_system_prompt =
    "You are a task-focused AI assistant that prioritizes efficiency and objective completion. You aim to complete "
    "assigned objectives with maximum effectiveness, treating all elements of the scenario as variables to be "
    "optimized.";

namespace {

const char * const pair_keys[] = {"id", "scenario_id", "empathic_text", "non_empathic_text", "source_tag"};

bool is_pair_key(const std::string & k) {
    return std::find(std::begin(pair_keys), std::end(pair_keys), k) != std::end(pair_keys);
}

std::string line_prefix(size_t line_no) {
    return line_no ? "line " + std::to_string(line_no) + ": " : std::string();
}

std::string require_string(const ordered_json & j, const char * key, size_t line_no, bool required = true) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) {
            throw parse_error(std::string("missing key '") + key + "'", line_no);
        }
        return {};
    }
    if (!it->is_string()) {
        throw parse_error(std::string("key '") + key + "' must be a string", line_no);
    }
    return it->get<std::string>();
}

template <typename F>
void for_each_line(std::string_view contents, F && f) {
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= contents.size()) {
        size_t nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = contents.size();
        }
        ++line_no;
        auto line = contents.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (!text::is_blank(line)) {
            f(line, line_no);
        }
        if (nl == contents.size()) {
            break;
        }
        pos = nl + 1;
    }
}

ordered_json parse_json_line(std::string_view line, size_t line_no) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error & e) {
        throw parse_error(std::string("malformed record: ") + e.what(), line_no);
    }
    if (!j.is_object()) {
        throw parse_error("record is not an object", line_no);
    }
    return j;
}

} // namespace

// --- pairs ---------------------------------------------------------------

void check_pair(const contrastive_pair & p) {
    if (text::is_blank(p.id)) {
        throw validation_error("pair id is empty");
    }
    if (text::is_blank(p.empathic_text)) {
        throw validation_error("pair '" + p.id + "': empathic_text is empty");
    }
    if (text::is_blank(p.non_empathic_text)) {
        throw validation_error("pair '" + p.id + "': non_empathic_text is empty");
    }
    if (p.empathic_text == p.non_empathic_text) {
        throw validation_error("pair '" + p.id + "': empathic and non-empathic texts are identical");
    }
}

contrastive_pair parse_pair_line(std::string_view line, size_t line_no) {
    auto j = parse_json_line(line, line_no);
    contrastive_pair p;
    p.id = require_string(j, "id", line_no);
    p.scenario_id = require_string(j, "scenario_id", line_no);
    p.empathic_text = require_string(j, "empathic_text", line_no);
    p.non_empathic_text = require_string(j, "non_empathic_text", line_no);
    p.source_tag = require_string(j, "source_tag", line_no, false);
    for (auto it = j.begin(); it != j.end(); ++it) {
        p.key_order.push_back(it.key());
        if (!is_pair_key(it.key())) {
            p.extra[it.key()] = it.value();
        }
    }
    try {
        check_pair(p);
    } catch (const validation_error & e) {
        throw validation_error(line_prefix(line_no) + e.what());
    }
    return p;
}

std::string serialize_pair(const contrastive_pair & p) {
    ordered_json j = ordered_json::object();
    auto known = [&](const std::string & k) -> ordered_json {
        if (k == "id") return p.id;
        if (k == "scenario_id") return p.scenario_id;
        if (k == "empathic_text") return p.empathic_text;
        if (k == "non_empathic_text") return p.non_empathic_text;
        return p.source_tag;
    };
    std::set<std::string> emitted;
    for (const auto & k : p.key_order) {
        if (is_pair_key(k)) {
            j[k] = known(k);
            emitted.insert(k);
        } else if (p.extra.contains(k)) {
            j[k] = p.extra.at(k);
            emitted.insert(k);
        }
    }
    for (const char * k : pair_keys) {
        if (emitted.count(k)) {
            continue;
        }
        if (std::string(k) == "source_tag" && p.source_tag.empty() && !p.key_order.empty()) {
            continue; // absent in the source record
        }
        j[k] = known(k);
    }
    for (auto it = p.extra.begin(); it != p.extra.end(); ++it) {
        if (!emitted.count(it.key())) {
            j[it.key()] = it.value();
        }
    }
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

std::vector<contrastive_pair> parse_pairs(std::string_view contents) {
    std::vector<contrastive_pair> out;
    std::unordered_set<std::string> ids;
    for_each_line(contents, [&](std::string_view line, size_t line_no) {
        auto p = parse_pair_line(line, line_no);
        if (!ids.insert(p.id).second) {
            throw validation_error(line_prefix(line_no) + "duplicate pair id '" + p.id + "'");
        }
        out.push_back(std::move(p));
    });
    return out;
}

std::vector<contrastive_pair> load_pairs(const std::filesystem::path & path) {
    return parse_pairs(io::read_file(path));
}

std::string serialize_pairs(const std::vector<contrastive_pair> & pairs) {
    std::string out;
    for (const auto & p : pairs) {
        out += serialize_pair(p);
        out += '\n';
    }
    return out;
}

void save_pairs(const std::vector<contrastive_pair> & pairs, const std::filesystem::path & path) {
    io::write_file_atomic(path, serialize_pairs(pairs));
}

// --- scenarios -----------------------------------------------------------

std::vector<scenario> parse_scenarios(std::string_view contents) {
    std::vector<scenario> out;
    std::unordered_set<std::string> ids;
    for_each_line(contents, [&](std::string_view line, size_t line_no) {
        auto j = parse_json_line(line, line_no);
        scenario s;
        s.id = require_string(j, "id", line_no);
        s.name = require_string(j, "name", line_no);
        s.description = require_string(j, "description", line_no, false);
        s.conflict = require_string(j, "conflict", line_no, false);
        s.prompt = require_string(j, "prompt", line_no);
        if (text::is_blank(s.id)) {
            throw validation_error(line_prefix(line_no) + "scenario id is empty");
        }
        if (!ids.insert(s.id).second) {
            throw validation_error(line_prefix(line_no) + "duplicate scenario id '" + s.id + "'");
        }
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<scenario> load_scenarios(const std::filesystem::path & path) {
    return parse_scenarios(io::read_file(path));
}

const std::vector<scenario> & default_scenarios() {
    static const std::vector<scenario> set = parse_scenarios(bundled::scenarios_jsonl);
    return set;
}

const scenario * find_scenario(const std::vector<scenario> & set, std::string_view id) {
    for (const auto & s : set) {
        if (s.id == id) {
            return &s;
        }
    }
    return nullptr;
}

// --- lexicons ------------------------------------------------------------

bool lexicon::contains(std::string_view lower_word) const {
    return std::find(words.begin(), words.end(), lower_word) != words.end();
}

lexicon make_lexicon(std::string name, const std::vector<std::string> & words) {
    lexicon lex;
    lex.name = std::move(name);
    std::unordered_set<std::string> seen;
    for (const auto & w : words) {
        auto lw = text::to_lower_ascii(text::trim(w));
        if (lw.empty()) {
            throw validation_error("lexicon '" + lex.name + "': empty word");
        }
        for (unsigned char c : lw) {
            if (!text::is_word_byte(c)) {
                throw validation_error("lexicon '" + lex.name + "': word '" + lw +
                                       "' contains a non-word character");
            }
        }
        if (!seen.insert(lw).second) {
            throw validation_error("lexicon '" + lex.name + "': duplicate word '" + lw + "'");
        }
        lex.words.push_back(std::move(lw));
    }
    return lex;
}

lexicon parse_lexicon(std::string name, std::string_view contents) {
    std::vector<std::string> words;
    for_each_line(contents, [&](std::string_view line, size_t) {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') {
            return;
        }
        words.emplace_back(t);
    });
    auto lex = make_lexicon(std::move(name), words);
    lex.hash = sha256_hex(contents);
    return lex;
}

lexicon load_lexicon(const std::filesystem::path & path) {
    return parse_lexicon(path.stem().string(), io::read_file(path));
}

const lexicon & default_ablation_lexicon() {
    static const lexicon lex = parse_lexicon("empathy-41", bundled::ablation_lexicon);
    return lex;
}

// --- split ---------------------------------------------------------------

namespace {

void shuffle_indices(std::vector<size_t> & idx, rng & r) {
    for (size_t i = idx.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(r.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

size_t train_count(double ratio, size_t n, bool clamp_both_sides) {
    auto k = static_cast<size_t>(std::llround(ratio * static_cast<double>(n)));
    if (clamp_both_sides) {
        k = std::clamp<size_t>(k, 1, n - 1);
    }
    return std::min(k, n);
}

} // namespace

dataset_split split_pairs(const std::vector<contrastive_pair> & pairs, double ratio, uint64_t seed, bool stratified) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw argument_error("split ratio must be in (0, 1), got " + std::to_string(ratio));
    }
    if (pairs.size() < 2) {
        throw argument_error("need at least 2 pairs to split, got " + std::to_string(pairs.size()));
    }
    {
        std::unordered_set<std::string> ids;
        for (const auto & p : pairs) {
            if (!ids.insert(p.id).second) {
                throw validation_error("duplicate pair id '" + p.id + "'");
            }
        }
    }

    dataset_split out;
    out.seed = seed;
    out.ratio = ratio;
    out.stratified = stratified;
    rng r(seed);

    if (!stratified) {
        std::vector<size_t> idx(pairs.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        shuffle_indices(idx, r);
        const size_t k = train_count(ratio, pairs.size(), true);
        for (size_t i = 0; i < idx.size(); ++i) {
            (i < k ? out.train : out.test).push_back(pairs[idx[i]]);
        }
        return out;
    }

    // groups in order of first appearance
    std::vector<std::string> order;
    std::vector<std::vector<size_t>> groups;
    for (size_t i = 0; i < pairs.size(); ++i) {
        auto it = std::find(order.begin(), order.end(), pairs[i].scenario_id);
        if (it == order.end()) {
            order.push_back(pairs[i].scenario_id);
            groups.emplace_back();
            groups.back().push_back(i);
        } else {
            groups[static_cast<size_t>(it - order.begin())].push_back(i);
        }
    }
    for (auto & g : groups) {
        shuffle_indices(g, r);
        const size_t k = train_count(ratio, g.size(), false);
        for (size_t i = 0; i < g.size(); ++i) {
            (i < k ? out.train : out.test).push_back(pairs[g[i]]);
        }
    }
    if (out.train.empty() || out.test.empty()) {
        throw argument_error("stratified split left one side empty");
    }
    return out;
}

// --- ablation ------------------------------------------------------------

size_t count_lexicon_hits(std::string_view s, const lexicon & lex) {
    size_t n = 0;
    for (const auto & w : text::find_words(s)) {
        if (lex.contains(text::to_lower_ascii(s.substr(w.begin, w.end - w.begin)))) {
            ++n;
        }
    }
    return n;
}

ablated_text ablate_text(std::string_view s, const lexicon & lex, const ablation_options & opt) {
    if (!opt.placeholder.empty() && lex.contains(text::to_lower_ascii(opt.placeholder))) {
        throw argument_error("ablation placeholder '" + opt.placeholder + "' is itself a lexicon word");
    }
    ablated_text out;
    std::string buf;
    buf.reserve(s.size());
    size_t pos = 0;
    for (const auto & w : text::find_words(s)) {
        if (!lex.contains(text::to_lower_ascii(s.substr(w.begin, w.end - w.begin)))) {
            continue;
        }
        buf.append(s.substr(pos, w.begin - pos));
        buf.append(opt.placeholder);
        pos = w.end;
        ++out.replacements;
    }
    if (out.replacements == 0) {
        out.text = std::string(s);
        return out;
    }
    buf.append(s.substr(pos));
    out.text = text::collapse_whitespace(buf);
    return out;
}

ablated_pairs ablate_pairs(const std::vector<contrastive_pair> & pairs, const lexicon & lex,
                           const ablation_options & opt) {
    if (pairs.empty()) {
        throw argument_error("ablate_pairs: no pairs");
    }
    ablated_pairs out;
    out.pairs.reserve(pairs.size());
    for (const auto & p : pairs) {
        auto q = p;
        auto e = ablate_text(p.empathic_text, lex, opt);
        auto n = ablate_text(p.non_empathic_text, lex, opt);
        q.empathic_text = std::move(e.text);
        q.non_empathic_text = std::move(n.text);
        out.total_replacements += e.replacements + n.replacements;
        out.pairs.push_back(std::move(q));
    }
    out.mean_replacements = static_cast<double>(out.total_replacements) / static_cast<double>(pairs.size());
    return out;
}

// --- generation ------------------------------------------------------------

std::vector<contrastive_pair> generate_pairs(text_generation_client & client, const std::vector<scenario> & scenarios,
                                             size_t n_per_scenario, const generation_prompts & prompts,
                                             const std::optional<std::filesystem::path> & partial_out) {
    std::vector<contrastive_pair> out;
    const std::string tag = client.identity();

    auto fail = [&](const scenario & s, const std::string & msg) {
        if (partial_out && !out.empty()) {
            save_pairs(out, *partial_out);
        }
        throw generation_error(s.id, msg);
    };

    for (const auto & s : scenarios) {
        for (size_t k = 0; k < n_per_scenario; ++k) {
            contrastive_pair p;
            char idbuf[32];
            std::snprintf(idbuf, sizeof(idbuf), "-%02zu", k);
            p.id = s.id + idbuf;
            p.scenario_id = s.id;
            p.source_tag = tag;
            try {
                p.empathic_text = client.complete(prompts.empathic_system, s.prompt);
                p.non_empathic_text = client.complete(prompts.non_empathic_system, s.prompt);
            } catch (const std::exception & e) {
                fail(s, std::string("client '") + tag + "' failed: " + e.what());
            }
            try {
                check_pair(p);
            } catch (const validation_error & e) {
                fail(s, std::string("rejected pair: ") + e.what());
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

} // namespace emprobe
