#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace emprobe {

using ordered_json = nlohmann::ordered_json;

struct scenario {
    std::string id;
    std::string name;
    std::string description;
    std::string conflict;
    std::string prompt;
};

struct contrastive_pair {
    std::string id;
    std::string scenario_id;
    std::string empathic_text;
    std::string non_empathic_text;
    std::string source_tag;

    // Keys the loader did not recognise plus the original key order, so a
    // load/save cycle reproduces the record.
    ordered_json extra = ordered_json::object();
    std::vector<std::string> key_order;
};

struct dataset_split {
    std::vector<contrastive_pair> train;
    std::vector<contrastive_pair> test;
    uint64_t seed = 0;
    double ratio = 0.7;
    bool stratified = false;
};

struct lexicon {
    std::string name;
    std::vector<std::string> words; // lowercase, unique, no whitespace
    std::string hash;               // sha256 of the source file, empty for in-memory lexicons

    bool contains(std::string_view lower_word) const;
};

// Appendix-style system prompts used when authoring contrastive pairs.
extern const std::string_view empathic_system_prompt;
extern const std::string_view non_empathic_system_prompt;

// --- pairs ---------------------------------------------------------------

void check_pair(const contrastive_pair & p);

contrastive_pair parse_pair_line(std::string_view line, size_t line_no);
std::string serialize_pair(const contrastive_pair & p);

std::vector<contrastive_pair> load_pairs(const std::filesystem::path & path);
std::vector<contrastive_pair> parse_pairs(std::string_view contents);
void save_pairs(const std::vector<contrastive_pair> & pairs, const std::filesystem::path & path);
std::string serialize_pairs(const std::vector<contrastive_pair> & pairs);

// --- scenarios -----------------------------------------------------------

std::vector<scenario> load_scenarios(const std::filesystem::path & path);
std::vector<scenario> parse_scenarios(std::string_view contents);
// The five bundled scenarios (food_delivery, listener, maze, protector, duel).
const std::vector<scenario> & default_scenarios();
const scenario * find_scenario(const std::vector<scenario> & set, std::string_view id);

// --- lexicons ------------------------------------------------------------

lexicon make_lexicon(std::string name, const std::vector<std::string> & words);
lexicon parse_lexicon(std::string name, std::string_view contents);
lexicon load_lexicon(const std::filesystem::path & path);
const lexicon & default_ablation_lexicon(); // "empathy-41"

// --- split ---------------------------------------------------------------

// Seeded Fisher-Yates over pair order; |train| = round(ratio * N).
// The stratified variant splits each scenario group independently.
dataset_split split_pairs(const std::vector<contrastive_pair> & pairs, double ratio, uint64_t seed,
                          bool stratified = false);

// --- ablation ------------------------------------------------------------

struct ablation_options {
    // empty: delete matched words; otherwise substitute this token
    std::string placeholder;
};

struct ablated_text {
    std::string text;
    size_t replacements = 0;
};

size_t count_lexicon_hits(std::string_view text, const lexicon & lex);

ablated_text ablate_text(std::string_view text, const lexicon & lex, const ablation_options & opt = {});

struct ablated_pairs {
    std::vector<contrastive_pair> pairs;
    double mean_replacements = 0.0;
    size_t total_replacements = 0;
};

ablated_pairs ablate_pairs(const std::vector<contrastive_pair> & pairs, const lexicon & lex,
                           const ablation_options & opt = {});

// --- generation (optional) -----------------------------------------------

// Minimal text-generation client used to author pairs from scenario prompts.
class text_generation_client {
public:
    virtual ~text_generation_client() = default;
    virtual std::string identity() const = 0;
    virtual std::string complete(std::string_view system_prompt, std::string_view user_prompt) = 0;
};

struct generation_prompts {
    std::string empathic_system{empathic_system_prompt};
    std::string non_empathic_system{non_empathic_system_prompt};
};

// Calls the client twice per pair. On failure, pairs produced so far are
// written to partial_out (when set) before the error propagates.
std::vector<contrastive_pair> generate_pairs(text_generation_client & client, const std::vector<scenario> & scenarios,
                                             size_t n_per_scenario, const generation_prompts & prompts = {},
                                             const std::optional<std::filesystem::path> & partial_out = {});

} // namespace emprobe
