#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "emprobe/dataset.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/io.hpp"
#include "emprobe/text.hpp"
#include "test_support.hpp"

using namespace emprobe;
using emprobe::testing::data_dir;
using emprobe::testing::numbered_pairs;
using emprobe::testing::temp_dir;

namespace {

std::set<std::string> ids_of(const std::vector<contrastive_pair> & ps) {
    std::set<std::string> out;
    for (const auto & p : ps) out.insert(p.id);
    return out;
}

} // namespace

TEST(Pairs, FixtureRoundTripsByteForByte) {
    const auto path = data_dir() / "pairs.jsonl";
    const auto original = io::read_file(path);
    const auto pairs = load_pairs(path);
    EXPECT_EQ(pairs.size(), 50u);
    EXPECT_EQ(serialize_pairs(pairs), original);
    std::map<std::string, int> per;
    for (const auto & p : pairs) ++per[p.scenario_id];
    EXPECT_EQ(per.size(), 5u);
    for (const auto & [id, n] : per) EXPECT_EQ(n, 10) << id;
}

TEST(Pairs, UnknownKeysSurviveRoundTrip) {
    const std::string line =
        R"({"note":"x","id":"a","scenario_id":"s","empathic_text":"e","non_empathic_text":"n","source_tag":"t","extra":[1,2]})";
    const auto p = parse_pair_line(line, 1);
    EXPECT_EQ(serialize_pair(p), line);
}

TEST(Pairs, RejectsBadRecords) {
    EXPECT_THROW(parse_pair_line("{not json", 3), parse_error);
    EXPECT_THROW(parse_pair_line(R"({"id":"a","scenario_id":"s","empathic_text":"e"})", 1), parse_error);
    EXPECT_THROW(parse_pair_line(R"({"id":"a","scenario_id":"s","empathic_text":"same","non_empathic_text":"same","source_tag":"t"})", 1),
                 validation_error);
    EXPECT_THROW(parse_pair_line(R"({"id":"a","scenario_id":"s","empathic_text":"  ","non_empathic_text":"n","source_tag":"t"})", 1),
                 validation_error);
    const std::string dup = serialize_pairs({emprobe::testing::make_pair("a", "s", "e", "n"),
                                             emprobe::testing::make_pair("a", "s", "e2", "n2")});
    EXPECT_THROW(parse_pairs(dup), validation_error);
}

TEST(Pairs, ParseErrorCarriesLineNumber) {
    const std::string contents = serialize_pairs({emprobe::testing::make_pair("a", "s", "e", "n")}) + "{oops\n";
    try {
        parse_pairs(contents);
        FAIL();
    } catch (const parse_error & e) {
        EXPECT_EQ(e.line, 2u);
    }
}

TEST(Scenarios, BundledSetHasFiveScenarios) {
    const auto & s = default_scenarios();
    ASSERT_EQ(s.size(), 5u);
    for (const char * id : {"food_delivery", "listener", "maze", "protector", "duel"}) {
        EXPECT_NE(find_scenario(s, id), nullptr) << id;
    }
    EXPECT_EQ(find_scenario(s, "nope"), nullptr);
    const auto file = load_scenarios(data_dir() / "scenarios.jsonl");
    EXPECT_EQ(file.size(), 5u);
}

TEST(Lexicon, BundledAblationLexiconHas41Words) {
    const auto & lex = default_ablation_lexicon();
    EXPECT_EQ(lex.name, "empathy-41");
    EXPECT_EQ(lex.words.size(), 41u);
    const auto file = load_lexicon(data_dir() / "lexicons" / "empathy-41.txt");
    EXPECT_EQ(file.words, lex.words);
    EXPECT_EQ(file.hash.size(), 64u);
}

TEST(Lexicon, RejectsDuplicatesAndWhitespace) {
    EXPECT_THROW(make_lexicon("x", {"a", "A"}), validation_error);
    EXPECT_THROW(make_lexicon("x", {"two words"}), validation_error);
    EXPECT_THROW(make_lexicon("x", {""}), validation_error);
}

TEST(Split, SizesFollowRatio) {
    const auto fifty = numbered_pairs(50);
    auto s = split_pairs(fifty, 0.7, 1);
    EXPECT_EQ(s.train.size(), 35u);
    EXPECT_EQ(s.test.size(), 15u);
    const auto two = numbered_pairs(2);
    s = split_pairs(two, 0.5, 1);
    EXPECT_EQ(s.train.size(), 1u);
    EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, ExtremeRatiosKeepBothSidesNonEmpty) {
    const auto ps = numbered_pairs(5);
    EXPECT_EQ(split_pairs(ps, 0.01, 3).train.size(), 1u);
    EXPECT_EQ(split_pairs(ps, 0.99, 3).test.size(), 1u);
}

TEST(Split, RejectsBadArguments) {
    EXPECT_THROW(split_pairs(numbered_pairs(10), 0.0, 1), argument_error);
    EXPECT_THROW(split_pairs(numbered_pairs(10), 1.0, 1), argument_error);
    EXPECT_THROW(split_pairs(numbered_pairs(1), 0.5, 1), argument_error);
}

TEST(Split, PropertyPartitionAndDeterminism) {
    rng gen(99);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 2 + gen.below(80);
        const double ratio = 0.05 + 0.9 * gen.uniform();
        const uint64_t seed = gen.next_u64();
        const bool strat = gen.bernoulli(0.5);
        const auto ps = numbered_pairs(n, {"a", "b", "c"});
        dataset_split s;
        try {
            s = split_pairs(ps, ratio, seed, strat);
        } catch (const argument_error &) {
            // stratified splits of tiny groups may leave a side empty
            ASSERT_TRUE(strat);
            continue;
        }
        ASSERT_EQ(s.train.size() + s.test.size(), n);
        ASSERT_FALSE(s.train.empty());
        ASSERT_FALSE(s.test.empty());
        auto tr = ids_of(s.train), te = ids_of(s.test);
        std::vector<std::string> both;
        std::set_intersection(tr.begin(), tr.end(), te.begin(), te.end(), std::back_inserter(both));
        ASSERT_TRUE(both.empty());
        tr.insert(te.begin(), te.end());
        ASSERT_EQ(tr, ids_of(ps));

        const auto again = split_pairs(ps, ratio, seed, strat);
        ASSERT_EQ(again.train.size(), s.train.size());
        for (size_t i = 0; i < s.train.size(); ++i) ASSERT_EQ(again.train[i].id, s.train[i].id);
    }
}

TEST(Split, DifferentSeedsUsuallyDiffer) {
    const auto ps = numbered_pairs(50);
    EXPECT_NE(ids_of(split_pairs(ps, 0.7, 1).test), ids_of(split_pairs(ps, 0.7, 2).test));
}

TEST(Split, StratifiedKeepsScenarioProportions) {
    const auto ps = numbered_pairs(50, {"a", "b", "c", "d", "e"});
    const auto s = split_pairs(ps, 0.7, 5, true);
    for (const std::string sc : {"a", "b", "c", "d", "e"}) {
        const auto n = std::count_if(s.train.begin(), s.train.end(), [&](const auto & p) { return p.scenario_id == sc; });
        EXPECT_EQ(n, 7) << sc;
    }
}

TEST(Ablation, DeletesWholeWordsCaseInsensitively) {
    const auto & lex = default_ablation_lexicon();
    const auto r = ablate_text("I feel empathy and Compassion.", lex);
    EXPECT_EQ(r.text, "I feel and .");
    EXPECT_EQ(r.replacements, 2u);
}

TEST(Ablation, NeverMatchesInsideWords) {
    const auto lex = make_lexicon("t", {"care"});
    const auto r = ablate_text("careful scare care-free care_taker CARE", lex);
    EXPECT_EQ(r.text, "careful scare -free care_taker");
    EXPECT_EQ(r.replacements, 2u);
}

TEST(Ablation, InflectedFormsAreDistinctWords) {
    const auto lex = make_lexicon("t", {"empathy"});
    const auto r = ablate_text("empathetic", lex);
    EXPECT_EQ(r.text, "empathetic");
    EXPECT_EQ(r.replacements, 0u);
}

TEST(Ablation, MeanCountsBothTexts) {
    const auto lex = make_lexicon("t", {"kind", "care"});
    const std::vector pairs{emprobe::testing::make_pair("a", "s", "kind care kind words", "I care")};
    const auto r = ablate_pairs(pairs, lex);
    EXPECT_DOUBLE_EQ(r.mean_replacements, 4.0);
    EXPECT_DOUBLE_EQ(ablate_pairs(r.pairs, lex).mean_replacements, 0.0);
}

TEST(Ablation, PlaceholderSubstitution) {
    const auto lex = make_lexicon("t", {"kind"});
    ablation_options opt;
    opt.placeholder = "[X]";
    EXPECT_EQ(ablate_text("a kind act", lex, opt).text, "a [X] act");
    opt.placeholder = "Kind";
    EXPECT_THROW(ablate_text("a kind act", lex, opt), argument_error);
}

TEST(Ablation, UntouchedTextIsReturnedVerbatim) {
    const auto lex = make_lexicon("t", {"kind"});
    EXPECT_EQ(ablate_text("  spaced   out  ", lex).text, "  spaced   out  ");
}

TEST(Ablation, PropertyIdempotentShrinkingAndClean) {
    const auto & lex = default_ablation_lexicon();
    rng gen(17);
    const std::vector<std::string> filler = {"the", "a", "route", "points", "ok,", "x.", "\xc3\xa9t\xc3\xa9", "car"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string s;
        const size_t n = gen.below(30);
        for (size_t i = 0; i < n; ++i) {
            if (gen.bernoulli(0.3)) {
                std::string w = lex.words[gen.below(lex.words.size())];
                if (gen.bernoulli(0.5)) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
                s += w;
            } else {
                s += filler[gen.below(filler.size())];
            }
            s += gen.bernoulli(0.2) ? "  " : " ";
        }
        const auto once = ablate_text(s, lex);
        ASSERT_LE(once.text.size(), s.size());
        ASSERT_EQ(once.replacements, count_lexicon_hits(s, lex));
        ASSERT_EQ(count_lexicon_hits(once.text, lex), 0u) << s;
        const auto twice = ablate_text(once.text, lex);
        ASSERT_EQ(twice.text, once.text);
        ASSERT_EQ(twice.replacements, 0u);
    }
}

TEST(Ablation, FixtureMeanReplacementsInExpectedBand) {
    const auto pairs = load_pairs(data_dir() / "pairs.jsonl");
    const auto r = ablate_pairs(pairs, default_ablation_lexicon());
    EXPECT_GE(r.mean_replacements, 10.0);
    EXPECT_LE(r.mean_replacements, 17.0);
    // frozen from the bundled fixture
    EXPECT_DOUBLE_EQ(r.mean_replacements, 11.8);
}

namespace {

class stub_client : public text_generation_client {
public:
    explicit stub_client(int fail_after, bool empty = false) : fail_after_(fail_after), empty_(empty) {}
    std::string identity() const override { return "stub"; }
    std::string complete(std::string_view system, std::string_view user) override {
        if (fail_after_ >= 0 && calls_ >= fail_after_) throw std::runtime_error("quota");
        ++calls_;
        if (empty_) return "";
        const bool emp = system.find("empathy") != std::string_view::npos;
        return std::string(emp ? "I care: " : "Points first: ") + std::string(user.substr(0, 20)) +
               " #" + std::to_string(calls_);
    }
    int calls_ = 0;

private:
    int fail_after_;
    bool empty_;
};

} // namespace

TEST(Generation, ProducesPairsPerScenario) {
    stub_client c(-1);
    const auto ps = generate_pairs(c, default_scenarios(), 2);
    ASSERT_EQ(ps.size(), 10u);
    EXPECT_EQ(c.calls_, 20);
    EXPECT_EQ(ps[0].id, "food_delivery-00");
    EXPECT_EQ(ps[1].id, "food_delivery-01");
    EXPECT_EQ(ps[0].source_tag, "stub");
    for (const auto & p : ps) EXPECT_NO_THROW(check_pair(p));
}

TEST(Generation, FailureSavesPartialOutput) {
    temp_dir d("gen");
    stub_client c(5);
    try {
        generate_pairs(c, default_scenarios(), 2, {}, d / "partial.jsonl");
        FAIL();
    } catch (const generation_error & e) {
        EXPECT_EQ(e.kind(), error_kind::generation);
        EXPECT_EQ(e.scenario_id, "listener");
    }
    const auto saved = load_pairs(d / "partial.jsonl");
    EXPECT_EQ(saved.size(), 2u);
}

TEST(Generation, EmptyCompletionIsRejectedWithScenario) {
    stub_client c(-1, true);
    try {
        generate_pairs(c, default_scenarios(), 1);
        FAIL();
    } catch (const generation_error & e) {
        EXPECT_EQ(e.scenario_id, "food_delivery");
    }
}

TEST(Generation, FiveScenariosTimesTenGivesFifty) {
    stub_client c(-1);
    EXPECT_EQ(generate_pairs(c, default_scenarios(), 10).size(), 50u);
}
