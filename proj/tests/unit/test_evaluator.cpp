#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "xrl/evaluator.hpp"
#include "xrl/rng.hpp"

using namespace xrl;
using xrl::testing::make_replay;
using xrl::testing::TempDir;

namespace {

PredicateSchema levels_schema(int n_cat) {
    PredicateSchema s;
    s.n_cat = n_cat;
    std::vector<double> t;
    for (int i = 1; i < n_cat; ++i) t.push_back(i - 0.5);
    s.features.push_back({"x", t, level_labels(n_cat), false});
    return s;
}

Condition lv(int l) { return Condition({{0, level_bit(l)}}); }

RuleSet rules_for(const std::vector<std::pair<int, ActionId>>& pairs, int n_cat,
                  std::size_t n_actions) {
    RuleSet r;
    r.schema = levels_schema(n_cat);
    for (std::size_t a = 0; a < n_actions; ++a) r.action_names.push_back("a" + std::to_string(a));
    for (const auto& [l, a] : pairs) {
        Rule rule;
        rule.condition = lv(l);
        rule.action = a;
        rule.occurrence = 1.0;
        r.rules.push_back(rule);
    }
    return r;
}

ReplaySet column(const std::vector<double>& x, const std::vector<ActionId>& a, std::size_t n_actions) {
    std::vector<std::vector<double>> states;
    for (double v : x) states.push_back({v});
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_actions; ++i) names.push_back("a" + std::to_string(i));
    return make_replay({"x"}, states, a, names);
}

}  // namespace

TEST(Properties, Examples) {
    const Condition c1 = lv(0), c2 = lv(1), c3 = lv(2);
    EXPECT_EQ(eval_properties({{c1, c2}, {c2}}).e_len, 3u);
    EXPECT_EQ(eval_properties({{c1, c2}, {c2}}).e_dup, 1u);
    EXPECT_EQ(eval_properties({{c1}, {c2, c3}}).e_dup, 0u);
    const PropertyMetrics same = eval_properties({{c1, c2}, {c1, c2}, {c1, c2}});
    EXPECT_EQ(same.e_dup, 2u);
    EXPECT_EQ(same.e_len, 6u);
    EXPECT_EQ(duplicated_conditions({{c1, c2}, {c2}}), std::vector<Condition>{c2});
}

TEST(Fidelity, Perfect) {
    const ReplaySet rs = column({0, 1, 2, 0, 1}, {0, 1, 2, 0, 1}, 3);
    const FidelityMetrics m = eval_fidelity(rules_for({{0, 0}, {1, 1}, {2, 2}}, 3, 3), rs);
    EXPECT_EQ(m.e_approx, 0.0);
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.f1, 1.0);
}

TEST(Fidelity, TwoOfTenUnmatched) {
    const ReplaySet rs = column({0, 0, 0, 0, 0, 0, 0, 0, 1, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 1);
    const FidelityMetrics m = eval_fidelity(rules_for({{0, 0}}, 2, 1), rs);
    EXPECT_DOUBLE_EQ(m.e_approx, 0.2);
    EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Fidelity, SixRecordToy) {
    // three a0 at level 0; two a1 and one a0 at level 1: one systematic error
    const ReplaySet rs = column({0, 0, 0, 1, 1, 1}, {0, 0, 0, 1, 1, 0}, 2);
    const FidelityMetrics m = eval_fidelity(rules_for({{0, 0}, {1, 1}}, 2, 2), rs);
    EXPECT_DOUBLE_EQ(m.accuracy, 5.0 / 6.0);
    // a0: P 3/3, R 3/4, F1 6/7; a1: P 2/3, R 1, F1 4/5
    EXPECT_DOUBLE_EQ(m.recall, (0.75 + 1.0) / 2.0);
    EXPECT_NEAR(m.f1, 29.0 / 35.0, 1e-15);
    EXPECT_EQ(m.confusion, (std::vector<std::vector<std::size_t>>{{3, 1}, {0, 2}}));
}

TEST(Fidelity, AbstentionsCountAgainstRecall) {
    RuleSet r = rules_for({{0, 0}}, 2, 2);
    r.fallback = Fallback::Abstain;
    const ReplaySet rs = column({0, 0, 1, 1}, {0, 0, 1, 1}, 2);
    const FidelityMetrics m = eval_fidelity(r, rs);
    EXPECT_EQ(m.n_abstained, 2u);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(m.e_approx, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 0.5);
}

TEST(Fidelity, Errors) {
    const ReplaySet rs = column({0}, {0}, 1);
    EXPECT_THROW(eval_fidelity(rules_for({}, 2, 1), rs), Error);
    ReplaySet empty = rs;
    empty.records.clear();
    EXPECT_THROW(eval_fidelity(rules_for({{0, 0}}, 2, 1), empty), Error);
}

TEST(Fidelity, TotalPredictions) {
    CounterRng rng(5, 5);
    std::vector<double> x;
    std::vector<ActionId> a;
    for (int i = 0; i < 500; ++i) {
        x.push_back(static_cast<double>(rng.below(5)));
        a.push_back(static_cast<ActionId>(rng.below(3)));
    }
    const FidelityMetrics m = eval_fidelity(rules_for({{1, 0}, {3, 2}}, 5, 3), column(x, a, 3));
    std::size_t total = 0;
    for (const auto& row : m.confusion) {
        for (auto c : row) total += c;
    }
    EXPECT_EQ(total, 500u);
    EXPECT_EQ(m.n_abstained, 0u);
}

TEST(MacroF1, RangeAndDiagonal) {
    CounterRng rng(7, 7);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + rng.below(4);
        std::vector<std::vector<std::size_t>> cm(n, std::vector<std::size_t>(n, 0));
        const bool diagonal = rng.below(3) == 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (diagonal && i != j) continue;
                cm[i][j] = rng.below(5);
            }
        }
        bool any = false;
        bool is_diag = true;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                any = any || cm[i][j] > 0;
                if (i != j && cm[i][j] > 0) is_diag = false;
            }
        }
        if (!any) continue;
        const auto [recall, f1] = macro_recall_f1(cm);
        EXPECT_GE(f1, 0.0);
        EXPECT_LE(f1, 1.0);
        EXPECT_GE(recall, 0.0);
        EXPECT_LE(recall, 1.0);
        EXPECT_EQ(f1 == 1.0, is_diag);
    }
}

TEST(Performance, CoastingRulesFail) {
    MountainCar env;
    RuleSet r;
    r.schema.n_cat = 2;
    r.schema.features = {{"position", {0.0}, level_labels(2), false},
                         {"velocity", {0.0}, level_labels(2), false}};
    r.action_names = env.action_names();
    Rule coast;
    coast.action = 1;
    coast.occurrence = 1.0;
    r.rules.push_back(coast);  // empty condition: matches every state
    const auto seeds = default_eval_seeds();
    const PerformanceMetrics m = eval_performance(r, env, seeds);
    ASSERT_EQ(m.episodes.size(), 10u);
    for (const auto& e : m.episodes) {
        EXPECT_EQ(e.cumulative_reward, -200.0);
        EXPECT_EQ(e.steps, 200u);
        EXPECT_EQ(e.average_reward, -1.0);
        EXPECT_FALSE(e.success);
        EXPECT_EQ(e.approximated_steps, 0u);
    }
    EXPECT_EQ(m.successes, 0u);
    EXPECT_EQ(m.mean_cr, -200.0);
}

TEST(Performance, ApproximatedStepsAreCounted) {
    MountainCar env;
    RuleSet r;
    r.schema.n_cat = 2;
    r.schema.features = {{"position", {0.0}, level_labels(2), false},
                         {"velocity", {0.0}, level_labels(2), false}};
    r.action_names = env.action_names();
    Rule right;
    right.condition = Condition({{1, level_bit(1)}});
    right.action = 2;
    right.occurrence = 1.0;
    Rule left;
    left.condition = Condition({{1, level_bit(0)}, {0, level_bit(1)}});
    left.action = 0;
    left.occurrence = 1.0;
    r.rules = {left, right};
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const PerformanceMetrics a = eval_performance(r, env, seeds);
    const PerformanceMetrics b = eval_performance(r, env, seeds);
    std::size_t approx = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a.episodes[i].cumulative_reward, b.episodes[i].cumulative_reward);
        EXPECT_EQ(a.episodes[i].steps, b.episodes[i].steps);
        EXPECT_DOUBLE_EQ(a.episodes[i].average_reward,
                         a.episodes[i].cumulative_reward / static_cast<double>(a.episodes[i].steps));
        approx += a.episodes[i].approximated_steps;
    }
    EXPECT_GT(approx, 0u);
    EXPECT_THROW(eval_performance(r, env, std::vector<std::uint64_t>{}), Error);
}

TEST(Normalize, Formula) {
    EXPECT_DOUBLE_EQ(normalize_score(-120, 200), -60.0);
    EXPECT_DOUBLE_EQ(normalize_score(500, 500), 100.0);
    const std::vector<double> v{-100, -50, 200};
    EXPECT_EQ(normalize_scores(v), (std::vector<double>{-50, -25, 100}));
    EXPECT_THROW(normalize_scores(std::vector<double>{0, 0}), Error);
    EXPECT_THROW(normalize_score(1, 0), Error);
}

TEST(Report, JsonTableAndFingerprint) {
    TempDir dir("rep");
    EvalReport rep;
    rep.config = {{"theta", 0.7}, {"n_cat", 5}};
    rep.properties = {12, 2};
    rep.fidelity.e_approx = 0.0;
    rep.fidelity.accuracy = 0.725;
    rep.fidelity.f1 = 0.55;
    PerformanceMetrics perf;
    perf.mean_cr = -183.4;
    perf.mean_ts = 183.4;
    perf.mean_ar = -1.0;
    rep.performance = perf;
    const Json j = to_json(rep);
    EXPECT_EQ(j["E_len"], 12);
    EXPECT_EQ(j["E_dup"], 2);
    EXPECT_EQ(j["E_CR"], -183.4);
    EXPECT_EQ(j["fingerprint"], rep.fingerprint());
    EXPECT_EQ(rep.fingerprint().size(), 16u);

    EvalReport other = rep;
    other.config["theta"] = 1.0;
    EXPECT_NE(other.fingerprint(), rep.fingerprint());

    write_eval_report(rep, dir / "a.json");
    write_eval_report(rep, dir / "b.json");
    std::stringstream a, b;
    a << std::ifstream(dir / "a.json").rdbuf();
    b << std::ifstream(dir / "b.json").rdbuf();
    EXPECT_EQ(a.str(), b.str());

    EvalReport no_perf = rep;
    no_perf.performance.reset();
    const std::string table = format_table({{"with", &rep}, {"without", &no_perf}}, "cell");
    EXPECT_NE(table.find("E_F1"), std::string::npos);
    EXPECT_NE(table.find("-183.4"), std::string::npos);
    EXPECT_NE(table.find("without"), std::string::npos);
}

TEST(Report, Fnv1a) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
