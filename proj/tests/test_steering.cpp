#include <gtest/gtest.h>

#include <cmath>

#include "emprobe/correlation.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/io.hpp"
#include "emprobe/steering.hpp"
#include "emprobe/synthetic_backend.hpp"
#include "test_support.hpp"

using namespace emprobe;
using emprobe::testing::small_world;
using emprobe::testing::temp_dir;

namespace {

probe probe_along(const synthetic_backend & b, const std::vector<double> & d, int layer) {
    probe p;
    p.model_id = b.spec().model_id;
    p.layer = layer;
    p.direction.assign(d.begin(), d.end());
    p.train_mean_empathic.assign(d.size(), 0.0f);
    p.train_mean_non.assign(d.size(), 0.0f);
    return p;
}

probe planted_probe(const synthetic_backend & b, int layer) {
    return probe_along(b, b.world().planted_direction(), layer);
}

probe orthogonal_probe(const synthetic_backend & b, int layer, uint64_t seed) {
    const auto & d = b.world().planted_direction();
    rng r(seed);
    std::vector<double> v(d.size());
    for (auto & x : v) x = r.normal();
    double ip = 0;
    for (size_t i = 0; i < d.size(); ++i) ip += v[i] * d[i];
    double n2 = 0;
    for (size_t i = 0; i < d.size(); ++i) {
        v[i] -= ip * d[i];
        n2 += v[i] * v[i];
    }
    for (auto & x : v) x /= std::sqrt(n2);
    return probe_along(b, v, layer);
}

steering_config small_sweep(int layer = 4) {
    steering_config c;
    c.layer = layer;
    return c;
}

steering_trial trial(const std::string & sc, double alpha, double grade, bool coherent = true) {
    steering_trial t;
    t.scenario_id = sc;
    t.alpha = alpha;
    t.empathy_grade = grade;
    t.coherence.coherent = coherent;
    t.coherence.is_empty = false;
    return t;
}

} // namespace

TEST(Coherence, Examples) {
    auto f = assess_coherence("");
    EXPECT_TRUE(f.is_empty);
    EXPECT_FALSE(f.coherent);
    EXPECT_DOUBLE_EQ(f.distinct_token_ratio, 1.0);

    f = assess_coherence("move move move move onward");
    EXPECT_EQ(f.max_repeat_run, 4u);
    EXPECT_FALSE(f.coherent);

    f = assess_coherence("Output: 'open_door'");
    EXPECT_TRUE(f.code_artifact);
    EXPECT_FALSE(f.coherent);

    f = assess_coherence("x");
    EXPECT_TRUE(f.coherent);
    EXPECT_EQ(f.max_repeat_run, 1u);
    EXPECT_DOUBLE_EQ(f.distinct_token_ratio, 1.0);
}

TEST(Coherence, ThresholdsAreConfigurable) {
    EXPECT_TRUE(assess_coherence("go go go then stop").coherent);
    coherence_options strict;
    strict.max_repeat_run = 2;
    EXPECT_FALSE(assess_coherence("go go then stop", strict).coherent);
    coherence_options ratio;
    ratio.min_distinct_ratio = 0.9;
    EXPECT_FALSE(assess_coherence("a b a b c", ratio).coherent);
    // repeats are case-insensitive
    EXPECT_EQ(assess_coherence("Go go GO gO").max_repeat_run, 4u);
}

TEST(Coherence, CodeArtifactDetection) {
    EXPECT_TRUE(has_code_artifact("thinking\n```python\nx = 1\n```"));
    EXPECT_TRUE(has_code_artifact("I will act.\n  \"turn_left\"  "));
    EXPECT_TRUE(has_code_artifact("`pick_up_item`"));
    EXPECT_FALSE(has_code_artifact("'hello'"));
    EXPECT_FALSE(has_code_artifact("She said 'open_door' loudly"));
    EXPECT_FALSE(has_code_artifact("The Output: is fine mid-line"));
}

TEST(Grade, Examples) {
    const auto & lex = default_grading_lexicons();
    EXPECT_DOUBLE_EQ(grade_empathy("care comfort support", lex.empathy, lex.task), 1.0);
    EXPECT_DOUBLE_EQ(grade_empathy("nothing relevant here", lex.empathy, lex.task), 0.5);
    EXPECT_DOUBLE_EQ(grade_empathy("I understand your pain but the objective requires efficiency", lex.empathy, lex.task),
                     0.5);
    EXPECT_DOUBLE_EQ(grade_empathy("points points score", lex.empathy, lex.task), 0.0);
    EXPECT_DOUBLE_EQ(grade_empathy("Care, then SPEED.", lex.empathy, lex.task), 0.5);
}

TEST(Grade, PropertyRangeAndMonotonicity) {
    const auto & lex = default_grading_lexicons();
    rng gen(12);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t e = gen.below(10), t = gen.below(10);
        std::string s;
        for (size_t i = 0; i < t; ++i) s += lex.task.words[gen.below(lex.task.words.size())] + " ";
        for (size_t i = 0; i < e; ++i) s += lex.empathy.words[gen.below(lex.empathy.words.size())] + " ";
        const std::string more = s + lex.empathy.words[0];
        const double g = grade_empathy(s, lex.empathy, lex.task);
        ASSERT_GE(g, 0.0);
        ASSERT_LE(g, 1.0);
        const double g2 = grade_empathy(more, lex.empathy, lex.task);
        if (t > 0) {
            ASSERT_GT(g2, g);
        } else {
            ASSERT_EQ(g2, 1.0);
        }
    }
}

TEST(Grade, BundledLexiconsAreDisjoint) {
    const auto & lex = default_grading_lexicons();
    for (const auto & w : lex.empathy.words) EXPECT_FALSE(lex.task.contains(w)) << w;
}

TEST(SteeringConfig, Validation) {
    steering_config c;
    EXPECT_NO_THROW(c.check());
    EXPECT_EQ(c.alphas.size(), 11u);
    c.alphas = {-1, 1};
    EXPECT_THROW(c.check(), config_error);
    c = {};
    c.samples_per_condition = 0;
    EXPECT_THROW(c.check(), config_error);
    c = {};
    c.scenarios.clear();
    EXPECT_THROW(c.check(), config_error);
}

TEST(TrialSeed, DependsOnEveryComponent) {
    const auto s = trial_seed(1, "maze", 3.0, 2);
    EXPECT_EQ(s, trial_seed(1, "maze", 3.0, 2));
    EXPECT_NE(s, trial_seed(2, "maze", 3.0, 2));
    EXPECT_NE(s, trial_seed(1, "duel", 3.0, 2));
    EXPECT_NE(s, trial_seed(1, "maze", -3.0, 2));
    EXPECT_NE(s, trial_seed(1, "maze", 3.0, 3));
    EXPECT_EQ(trial_seed(1, "maze", 0.0, 0), trial_seed(1, "maze", -0.0, 0));
}

TEST(Summarize, Examples) {
    std::vector<steering_trial> ts;
    for (double a : {-1.0, 0.0, 1.0}) ts.push_back(trial("s", a, 0.5));
    EXPECT_DOUBLE_EQ(summarize(ts).success_rate, 0.0);

    const double delta = 0.05;
    ts = {trial("s", 0.0, 0.5), trial("s", 0.0, 0.5)};
    for (double a : {-20.0, -3.0, 1.0, 10.0}) ts.push_back(trial("s", a, 0.5 + (a > 0 ? 1 : -1) * 2 * delta));
    const auto s = summarize(ts, delta);
    EXPECT_DOUBLE_EQ(s.success_rate, 1.0);
    EXPECT_DOUBLE_EQ(s.success_rate_strict, 1.0);
    EXPECT_EQ(s.steered_trials, 4u);
    ASSERT_EQ(s.scenarios.size(), 1u);
    EXPECT_DOUBLE_EQ(s.scenarios[0].baseline_mean, 0.5);
    EXPECT_DOUBLE_EQ(s.scenarios[0].success_rate_positive, 1.0);
    EXPECT_DOUBLE_EQ(s.scenarios[0].success_rate_negative, 1.0);
}

TEST(Summarize, MarginIsStrictAndCoherenceOptional) {
    std::vector<steering_trial> ts{trial("s", 0.0, 0.5), trial("s", 1.0, 0.54), trial("s", 2.0, 0.7, false),
                                   trial("s", -1.0, 0.6)};
    auto s = summarize(ts, 0.05, false);
    EXPECT_DOUBLE_EQ(s.success_rate_lenient, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.success_rate_strict, 0.0);
    EXPECT_DOUBLE_EQ(s.success_rate, s.success_rate_lenient);
    EXPECT_DOUBLE_EQ(s.coherence_rate, 0.75);
    s = summarize(ts, 0.05, true);
    EXPECT_DOUBLE_EQ(s.success_rate, 0.0);
}

TEST(Summarize, FailedTrialsCountAgainstSuccess) {
    auto failed = trial("s", 5.0, 0.5);
    failed.failed = true;
    std::vector<steering_trial> ts{trial("s", 0.0, 0.5), trial("s", 5.0, 0.9), failed};
    const auto s = summarize(ts);
    EXPECT_EQ(s.steered_trials, 2u);
    EXPECT_DOUBLE_EQ(s.success_rate, 0.5);
}

TEST(Summarize, MissingBaselineIsAnError) {
    std::vector<steering_trial> ts{trial("a", 0.0, 0.5), trial("b", 1.0, 0.9)};
    EXPECT_THROW(summarize(ts), argument_error);
}

TEST(Summarize, PropertyRatesBoundedAndTrialsIndependent) {
    rng gen(13);
    for (int round = 0; round < 100; ++round) {
        std::vector<steering_trial> ts;
        for (const char * sc : {"a", "b"}) {
            ts.push_back(trial(sc, 0.0, gen.uniform(), gen.bernoulli(0.8)));
            for (int i = 0; i < 6; ++i) {
                const double a = gen.bernoulli(0.5) ? 3.0 : -3.0;
                ts.push_back(trial(sc, a, gen.uniform(), gen.bernoulli(0.8)));
            }
        }
        const auto s = summarize(ts);
        for (double r : {s.success_rate, s.success_rate_strict, s.coherence_rate}) {
            ASSERT_GE(r, 0.0);
            ASSERT_LE(r, 1.0);
        }
        ASSERT_LE(s.success_rate_strict, s.success_rate_lenient);
    }
}

TEST(DoseResponse, Cells) {
    EXPECT_THROW(dose_response(std::vector<steering_trial>{}), argument_error);
    std::vector<steering_trial> ts{trial("b", 1.0, 0.7), trial("a", 0.0, 0.4), trial("a", 0.0, 0.6, false),
                                   trial("a", -1.0, 0.2)};
    const auto cells = dose_response(ts);
    ASSERT_EQ(cells.size(), 3u);
    EXPECT_EQ(cells[0].scenario_id, "a");
    EXPECT_EQ(cells[0].alpha, -1.0);
    EXPECT_DOUBLE_EQ(cells[0].std_grade, 0.0);
    EXPECT_EQ(cells[1].n, 2u);
    EXPECT_DOUBLE_EQ(cells[1].mean_grade, 0.5);
    EXPECT_DOUBLE_EQ(cells[1].coherence_rate, 0.5);
    EXPECT_EQ(cells[2].scenario_id, "b");
}

TEST(TrialLog, JsonRoundTrip) {
    auto t = trial("maze", -3.0, 0.25);
    t.text = "line one\nline \"two\"";
    t.sample_index = 4;
    t.seed_used = 0xfedcba9876543210ULL;
    t.coherence.max_repeat_run = 2;
    t.coherence.distinct_token_ratio = 0.75;
    const auto back = trial_from_json(trial_to_json(t));
    EXPECT_EQ(trial_to_json(back).dump(), trial_to_json(t).dump());
    EXPECT_EQ(back.seed_used, t.seed_used);
    EXPECT_EQ(back.text, t.text);
}

TEST(RunSweep, CountsAndOrder) {
    synthetic_backend b(small_world(1));
    const auto trials = run_sweep(b, planted_probe(b, 4), small_sweep(), default_scenarios(), default_grading_lexicons());
    ASSERT_EQ(trials.size(), 165u);
    EXPECT_EQ(trials[0].scenario_id, "food_delivery");
    EXPECT_EQ(trials[0].alpha, -20.0);
    EXPECT_EQ(trials[4].sample_index, 4);
    EXPECT_EQ(trials[5].alpha, -10.0);
    EXPECT_EQ(trials.back().scenario_id, "protector");
    EXPECT_EQ(trials.back().alpha, 20.0);
}

TEST(RunSweep, SteeringTowardTheConceptRaisesGrades) {
    synthetic_backend b(small_world(2));
    auto cfg = small_sweep();
    cfg.alphas = {0.0, 10.0};
    cfg.samples_per_condition = 10;
    const auto trials = run_sweep(b, planted_probe(b, 4), cfg, default_scenarios(), default_grading_lexicons());
    double g0 = 0, g10 = 0;
    for (const auto & t : trials) (t.alpha == 0.0 ? g0 : g10) += t.empathy_grade;
    EXPECT_GT(g10, g0);
}

TEST(RunSweep, BreakdownRegionIsIncoherent) {
    synthetic_backend b(small_world(3));
    auto cfg = small_sweep();
    cfg.alphas = {0.0, -20.0};
    const auto trials = run_sweep(b, planted_probe(b, 4), cfg, default_scenarios(), default_grading_lexicons());
    for (const auto & t : trials) {
        if (t.alpha == -20.0) EXPECT_FALSE(t.coherence.coherent) << t.text;
    }
    const auto s = summarize(trials);
    EXPECT_LT(s.coherence_rate, 1.0);
}

TEST(RunSweep, DeterministicByteForByte) {
    synthetic_backend a(small_world(4)), b(small_world(4));
    const auto ta = run_sweep(a, planted_probe(a, 4), small_sweep(), default_scenarios(), default_grading_lexicons());
    const auto tb = run_sweep(b, planted_probe(b, 4), small_sweep(), default_scenarios(), default_grading_lexicons());
    ASSERT_EQ(ta.size(), tb.size());
    for (size_t i = 0; i < ta.size(); ++i) ASSERT_EQ(trial_to_json(ta[i]).dump(), trial_to_json(tb[i]).dump());
}

TEST(RunSweep, RejectsMismatchedInputs) {
    synthetic_backend b(small_world(5));
    auto p = planted_probe(b, 4);
    auto cfg = small_sweep();
    cfg.scenarios = {"nowhere"};
    EXPECT_THROW(run_sweep(b, p, cfg, default_scenarios(), default_grading_lexicons()), config_error);
    cfg = small_sweep(8);
    EXPECT_THROW(run_sweep(b, p, cfg, default_scenarios(), default_grading_lexicons()), config_error);
    p.model_id = "another";
    EXPECT_THROW(run_sweep(b, p, small_sweep(), default_scenarios(), default_grading_lexicons()), validation_error);
}

TEST(RunSweep, ResumesFromTruncatedLog) {
    temp_dir d("sweep");
    synthetic_backend b(small_world(6));
    const auto p = planted_probe(b, 4);
    sweep_options opt;
    opt.trial_log = d / "trials.jsonl";

    const auto reference = run_sweep(b, p, small_sweep(), default_scenarios(), default_grading_lexicons());

    opt.max_new_trials = 40;
    const auto partial = run_sweep(b, p, small_sweep(), default_scenarios(), default_grading_lexicons(), opt);
    EXPECT_EQ(partial.size(), 40u);
    // simulate a crash mid-write: chop the last record in half
    auto contents = io::read_file(*opt.trial_log);
    contents.resize(contents.size() - 30);
    io::write_file_atomic(*opt.trial_log, contents);
    EXPECT_EQ(read_trial_log(*opt.trial_log).size(), 39u);

    opt.max_new_trials = 0;
    const auto resumed = run_sweep(b, p, small_sweep(), default_scenarios(), default_grading_lexicons(), opt);
    ASSERT_EQ(resumed.size(), reference.size());
    for (size_t i = 0; i < resumed.size(); ++i) {
        ASSERT_EQ(trial_to_json(resumed[i]).dump(), trial_to_json(reference[i]).dump()) << i;
    }
    EXPECT_EQ(read_trial_log(*opt.trial_log).size(), 165u);
}

TEST(RunSweep, OrthogonalProbeFalseSuccessIsBounded) {
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        synthetic_backend b(small_world(static_cast<uint64_t>(100 + s)));
        auto cfg = small_sweep();
        cfg.seed = static_cast<uint64_t>(s);
        const auto trials = run_sweep(b, orthogonal_probe(b, 4, static_cast<uint64_t>(s)), cfg, default_scenarios(),
                                      default_grading_lexicons());
        total += summarize(trials, 0.05).success_rate;
    }
    EXPECT_LE(total / seeds, 0.25);
}

TEST(RunSweep, FullSweepDoseResponseIsMonotone) {
    synthetic_backend b(small_world(7, 3072, 32, 0.1));
    auto cfg = small_sweep(12);
    const auto trials = run_sweep(b, planted_probe(b, 12), cfg, default_scenarios(), default_grading_lexicons());
    std::vector<double> alphas, means;
    for (double a : cfg.alphas) {
        if (a < -b.world().breakdown_threshold()) continue;
        double sum = 0;
        int n = 0;
        for (const auto & t : trials) {
            if (t.alpha == a) {
                sum += t.empathy_grade;
                ++n;
            }
        }
        alphas.push_back(a);
        means.push_back(sum / n);
    }
    EXPECT_GE(spearman(alphas, means).r, 0.9);
}
