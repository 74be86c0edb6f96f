#include <gtest/gtest.h>

#include "support.hpp"
#include "xrl/refiner.hpp"
#include "xrl/rng.hpp"

using namespace xrl;
using xrl::testing::make_replay;

namespace {

// a0 on [0, 1), a1 on [1, 2): a cut just below 1 separates them.
ReplaySet separable() {
    std::vector<std::vector<double>> states;
    std::vector<ActionId> actions;
    for (int i = 0; i < 100; ++i) {
        states.push_back({i / 100.0});
        actions.push_back(0);
        states.push_back({1.0 + i / 100.0});
        actions.push_back(1);
    }
    return make_replay({"x"}, states, actions, {"a0", "a1"});
}

PredicateSchema cuts(std::vector<double> t) {
    PredicateSchema s;
    s.n_cat = static_cast<int>(t.size()) + 1;
    s.features.push_back({"x", std::move(t), level_labels(s.n_cat), false});
    return s;
}

bool strictly_increasing(const PredicateSchema& s) {
    for (const auto& f : s.features) {
        for (std::size_t i = 1; i < f.thresholds.size(); ++i) {
            if (!(f.thresholds[i - 1] < f.thresholds[i])) return false;
        }
    }
    return true;
}

std::size_t adopted(const RefineResult& r) {
    std::size_t n = 0;
    for (const auto& s : r.trace) n += s.adopted;
    return n;
}

}  // namespace

TEST(MinDup, NoDuplicatesIsNoOp) {
    const PredicateSchema s = cuts({0.995});
    const RefineResult r = minimize_duplicates(separable(), s, {}, {});
    EXPECT_EQ(r.input_e_dup, 0u);
    EXPECT_EQ(r.schema, s);
    EXPECT_TRUE(r.trace.empty());
}

TEST(MinDup, SeparatingCutRemovesDuplicate) {
    const ReplaySet rs = separable();
    const PredicateSchema s = cuts({1.895});
    const RefineResult r = minimize_duplicates(rs, s, {}, {});
    EXPECT_EQ(r.input_e_dup, 1u);
    EXPECT_EQ(r.e_dup, 0u);
    EXPECT_GT(r.f1, r.input_f1);
    EXPECT_EQ(r.schema.features[0].thresholds, std::vector<double>{0.995});
    EXPECT_LE(r.iterations, 5);
    EXPECT_EQ(adopted(r), 1u);
    // the returned numbers describe the returned schema
    const PipelineResult check = run_pipeline(rs, r.schema, {});
    EXPECT_EQ(check.properties.e_dup, r.e_dup);
    EXPECT_EQ(check.fidelity.f1, r.f1);
}

TEST(MinDup, NoCandidateReturnsInput) {
    // both actions spread identically over x: no split separates them
    std::vector<std::vector<double>> states;
    std::vector<ActionId> actions;
    for (int i = 0; i < 60; ++i) {
        states.push_back({static_cast<double>(i % 6)});
        actions.push_back(static_cast<ActionId>((i / 6) % 2));
    }
    const ReplaySet rs = make_replay({"x"}, states, actions, {"a0", "a1"});
    const PredicateSchema s = cuts({2.5});
    RefineConfig cfg;
    cfg.budget = 1;
    const RefineResult r = minimize_duplicates(rs, s, {}, cfg);
    EXPECT_GE(r.input_e_dup, 1u);
    EXPECT_EQ(r.schema, s);
    EXPECT_EQ(r.e_dup, r.input_e_dup);
    EXPECT_EQ(adopted(r), 0u);
}

TEST(MaxF1, FixpointIsUnchanged) {
    const PredicateSchema s = cuts({0.995});
    const RefineResult r = maximize_f1(separable(), s, {}, {});
    EXPECT_EQ(r.input_f1, 1.0);
    EXPECT_EQ(r.schema, s);
    EXPECT_EQ(adopted(r), 0u);
    EXPECT_FALSE(r.trace.empty());
}

TEST(MaxF1, MisplacedCutImprovesInOneIteration) {
    const PredicateSchema s = cuts({1.5});
    RefineConfig cfg;
    cfg.budget = 1;
    const RefineResult r = maximize_f1(separable(), s, {}, cfg);
    EXPECT_GT(r.f1, r.input_f1);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(adopted(r), 1u);
}

TEST(MaxF1, FullStepIsClipped) {
    const PredicateSchema s = cuts({0.5, 1.0});
    RefineConfig cfg;
    cfg.alpha = 1.0;
    cfg.budget = 3;
    const RefineResult r = maximize_f1(separable(), s, {}, cfg);
    bool clipped = false;
    for (const auto& st : r.trace) {
        if (st.iteration == 1 && st.index == 0 && st.to > st.from) {
            EXPECT_LT(st.to, 1.0);
            EXPECT_EQ(st.to, std::nextafter(1.0, 0.0));
            clipped = true;
        }
    }
    EXPECT_TRUE(clipped);
    EXPECT_TRUE(strictly_increasing(r.schema));
}

TEST(RefineConfig, Validation) {
    RefineConfig c;
    c.m = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.alpha = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c.alpha = 1.5;
    EXPECT_THROW(c.validate(), Error);
    ReplaySet empty = separable();
    empty.records.clear();
    EXPECT_THROW(maximize_f1(empty, cuts({1.0}), {}, {}), Error);
}

TEST(RefineProperties, MonotoneOnRandomData) {
    CounterRng rng(19, 19);
    std::vector<std::vector<double>> states;
    std::vector<ActionId> actions;
    for (int i = 0; i < 600; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        const double y = rng.uniform(-1.0, 1.0);
        states.push_back({x, y});
        const bool noise = rng.below(10) == 0;
        actions.push_back(noise ? static_cast<ActionId>(rng.below(3)) : (x > 0.3 ? 2 : (y > 0 ? 1 : 0)));
    }
    const ReplaySet rs = make_replay({"x", "y"}, states, actions, {"a", "b", "c"});
    for (int t = 0; t < 4; ++t) {
        PredicateSchema s;
        s.n_cat = 3;
        for (const char* n : {"x", "y"}) {
            double a = rng.uniform(-0.9, 0.8);
            double b = rng.uniform(a + 0.01, 0.95);
            s.features.push_back({n, {a, b}, level_labels(3), false});
        }
        RefineConfig cfg;
        cfg.budget = 3;
        const RefineResult d = minimize_duplicates(rs, s, {}, cfg);
        EXPECT_LE(d.e_dup, d.input_e_dup);
        EXPECT_LE(d.iterations, 3);
        EXPECT_TRUE(strictly_increasing(d.schema));
        const RefineResult f = maximize_f1(rs, s, {}, cfg);
        EXPECT_GE(f.f1, f.input_f1);
        EXPECT_LE(f.iterations, 3);
        EXPECT_TRUE(strictly_increasing(f.schema));
    }
}

TEST(RefineTrace, Json) {
    const RefineResult r = minimize_duplicates(separable(), cuts({1.895}), {}, {});
    const Json j = trace_to_json(r);
    EXPECT_EQ(j["input"]["E_dup"], 1);
    EXPECT_EQ(j["output"]["E_dup"], 0);
    EXPECT_EQ(j["steps"].size(), r.trace.size());
    EXPECT_EQ(j["predicates"]["n_cat"], 2);
}
