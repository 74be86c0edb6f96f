#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "support.hpp"
#include "xrl/predicates.hpp"
#include "xrl/rng.hpp"

using namespace xrl;
using xrl::testing::make_replay;
using xrl::testing::TempDir;

namespace {

PredicateSchema one_feature(std::vector<double> thresholds) {
    PredicateSchema s;
    s.n_cat = static_cast<int>(thresholds.size()) + 1;
    s.features.push_back({"f", std::move(thresholds), level_labels(s.n_cat), false});
    return s;
}

ReplaySet column(const std::vector<double>& values, const std::vector<ActionId>& labels,
                 int n_actions) {
    std::vector<std::vector<double>> states;
    for (double v : values) states.push_back({v});
    std::vector<std::string> names;
    for (int a = 0; a < n_actions; ++a) names.push_back("a" + std::to_string(a));
    return make_replay({"f"}, states, labels, names);
}

double gini_mass(const std::map<ActionId, double>& counts) {
    double n = 0.0, sq = 0.0;
    for (const auto& [a, c] : counts) {
        n += c;
        sq += c * c;
    }
    return n == 0.0 ? 0.0 : n - sq / n;  // n * gini
}

// Exhaustive search over every midpoint between distinct sorted values.
std::pair<double, double> brute_force_split(const std::vector<double>& values,
                                            const std::vector<ActionId>& labels) {
    std::vector<double> cuts(values);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::map<ActionId, double> all;
    for (auto a : labels) all[a] += 1.0;
    const double parent = gini_mass(all);
    double best_gain = 0.0, best_t = std::nan("");
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        const double t = cuts[i - 1] + (cuts[i] - cuts[i - 1]) / 2.0;
        std::map<ActionId, double> l, r;
        for (std::size_t k = 0; k < values.size(); ++k) (values[k] <= t ? l : r)[labels[k]] += 1.0;
        const double gain = parent - gini_mass(l) - gini_mass(r);
        if (gain > best_gain + 1e-9) {
            best_gain = gain;
            best_t = t;
        }
    }
    return {best_t, best_gain};
}

}  // namespace

TEST(Discretize, Examples) {
    EXPECT_EQ(discretize(std::vector<double>{0.5}, one_feature({0.3}))[0], 1);
    EXPECT_EQ(discretize(std::vector<double>{0.2}, one_feature({-0.5, 0.0, 0.5}))[0], 2);
    EXPECT_EQ(discretize(std::vector<double>{0.0}, one_feature({0.0}))[0], 0);
}

TEST(Discretize, Errors) {
    EXPECT_THROW(discretize(std::vector<double>{std::nan("")}, one_feature({0.0})), Error);
    EXPECT_THROW(discretize(std::vector<double>{1.0, 2.0}, one_feature({0.0})), Error);
}

TEST(Labels, ByLevelCount) {
    EXPECT_EQ(level_labels(2), (std::vector<std::string>{"Low", "High"}));
    EXPECT_EQ(level_labels(3), (std::vector<std::string>{"Low", "Medium", "High"}));
    EXPECT_EQ(level_labels(5),
              (std::vector<std::string>{"Very Low", "Low", "Medium", "High", "Very High"}));
    for (int n : {4, 6, 7}) {
        const auto l = level_labels(n);
        EXPECT_EQ(l.size(), static_cast<std::size_t>(n));
        EXPECT_EQ(l.front(), "Extremely Low");
        EXPECT_EQ(l.back(), "Extremely High");
    }
    EXPECT_THROW(level_labels(1), Error);
}

TEST(GiniLimits, MidpointSplit) {
    const ReplaySet rs = column({0, 0, 0, 1, 1, 1}, {0, 0, 0, 1, 1, 1}, 2);
    const PredicateSchema s = make_gini_limits(rs, 2);
    EXPECT_EQ(s.features[0].thresholds, std::vector<double>{0.5});
    EXPECT_FALSE(s.features[0].degenerate);
}

TEST(GiniLimits, MixedLabelsFallBackToMedian) {
    const std::vector<double> v{1, 1, 2, 2, 3, 3, 4, 4};
    const std::vector<ActionId> y{0, 1, 0, 1, 0, 1, 0, 1};
    const auto [t, gain] = brute_force_split(v, y);
    EXPECT_TRUE(std::isnan(t)) << "oracle found an impurity-reducing split";
    EXPECT_TRUE(gini_tree_splits(v, y, 2).empty());
    const PredicateSchema s = make_gini_limits(column(v, y, 2), 2);
    EXPECT_EQ(s.features[0].thresholds, std::vector<double>{2.5});
}

TEST(GiniLimits, FourBlobsThreeGaps) {
    std::vector<double> v;
    std::vector<ActionId> y;
    const double centers[] = {-3.0, 0.0, 4.0, 9.0};
    for (int b = 0; b < 4; ++b) {
        for (int i = 0; i < 10; ++i) {
            v.push_back(centers[b] + 0.05 * i);
            y.push_back(b);
        }
    }
    const auto t = make_gini_limits(column(v, y, 4), 4).features[0].thresholds;
    ASSERT_EQ(t.size(), 3u);
    for (int g = 0; g < 3; ++g) {
        EXPECT_GT(t[g], centers[g] + 0.45);
        EXPECT_LT(t[g], centers[g + 1]);
    }
}

TEST(GiniLimits, ThreeBlobsPadInsideRange) {
    std::vector<double> v;
    std::vector<ActionId> y;
    const double centers[] = {0.0, 5.0, 10.0};
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < 10; ++i) {
            v.push_back(centers[b] + 0.1 * i);
            y.push_back(b);
        }
    }
    const auto t = make_gini_limits(column(v, y, 3), 4).features[0].thresholds;
    ASSERT_EQ(t.size(), 3u);
    int in_gaps = 0;
    for (double x : t) {
        in_gaps += (x > 0.9 && x < 5.0) || (x > 5.9 && x < 10.0);
        EXPECT_GT(x, 0.0);
        EXPECT_LT(x, 10.9);
    }
    EXPECT_EQ(in_gaps, 2);
}

TEST(GiniLimits, FirstSplitMatchesBruteForce) {
    CounterRng rng(1, 77);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(40));
        std::vector<double> v;
        std::vector<ActionId> y;
        for (int i = 0; i < n; ++i) {
            v.push_back(static_cast<double>(rng.below(15)));
            y.push_back(static_cast<ActionId>(rng.below(3)));
        }
        const auto [t, gain] = brute_force_split(v, y);
        const auto splits = gini_tree_splits(v, y, 2);
        if (std::isnan(t)) {
            EXPECT_TRUE(splits.empty());
            continue;
        }
        ASSERT_EQ(splits.size(), 1u) << "trial " << trial;
        EXPECT_EQ(splits[0].threshold, t) << "trial " << trial;
        EXPECT_NEAR(splits[0].gain, gain, 1e-9);
    }
}

TEST(GiniLimits, ConstantFeatureIsDegenerate) {
    const PredicateSchema s = make_gini_limits(column({2, 2, 2, 2}, {0, 1, 0, 1}, 2), 3);
    EXPECT_TRUE(s.features[0].degenerate);
    EXPECT_EQ(s.features[0].thresholds.front(), 2.0);
    EXPECT_NO_THROW(s.validate());
}

TEST(GiniLimits, EmptyReplay) {
    ReplaySet rs = column({1}, {0}, 1);
    rs.records.clear();
    EXPECT_THROW(make_gini_limits(rs, 2), Error);
    EXPECT_THROW(make_quantile_limits(rs, 2), Error);
}

TEST(QuantileLimits, Examples) {
    std::vector<double> v;
    std::vector<ActionId> y;
    for (int i = 1; i <= 100; ++i) {
        v.push_back(i);
        y.push_back(0);
    }
    const ReplaySet rs = column(v, y, 1);
    EXPECT_EQ(make_quantile_limits(rs, 2).features[0].thresholds, std::vector<double>{50.5});
    EXPECT_EQ(make_quantile_limits(rs, 4).features[0].thresholds,
              (std::vector<double>{25.75, 50.5, 75.25}));
}

TEST(QuantileLimits, ConstantIsDegenerate) {
    const PredicateSchema s = make_quantile_limits(column({3, 3, 3}, {0, 0, 0}, 1), 2);
    EXPECT_TRUE(s.features[0].degenerate);
    EXPECT_EQ(s.features[0].thresholds, std::vector<double>{3.0});
}

TEST(PredicateSchema, ValidationAndLookup) {
    PredicateSchema s = one_feature({0.0, 1.0});
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.find_label(0, "medium"), 1);
    EXPECT_EQ(s.find_label(0, "HIGH"), 2);
    EXPECT_EQ(s.find_label(0, "huge"), -1);
    s.features[0].thresholds = {1.0, 0.0};
    EXPECT_THROW(s.validate(), SchemaError);
    s.features[0].thresholds = {0.0};
    EXPECT_THROW(s.validate(), SchemaError);

    FeatureSchema fs;
    fs.names = {"g"};
    EXPECT_THROW(one_feature({0.0}).check_compatible(fs), SchemaError);
}

TEST(PredicateSchema, FileRoundTrip) {
    TempDir dir("pred");
    PredicateSchema s = one_feature({-0.25, 0.1 + 0.2, 1.0 / 3.0});
    s.source = "gini";
    write_predicates(s, dir / "p.json");
    EXPECT_EQ(read_predicates(dir / "p.json"), s);
}

TEST(PredicateProperties, MonotoneBinaryAndInside) {
    CounterRng rng(4, 4);
    std::vector<std::vector<double>> states;
    std::vector<ActionId> actions;
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        const double y = rng.uniform(-5.0, 5.0);
        states.push_back({x, y});
        actions.push_back(x + 0.2 * y > 0.1 ? 1 : (x < -0.5 ? 2 : 0));
    }
    const ReplaySet rs = make_replay({"x", "y"}, states, actions, {"a", "b", "c"});
    for (int n_cat = 2; n_cat <= 7; ++n_cat) {
        for (const auto& schema : {make_gini_limits(rs, n_cat), make_quantile_limits(rs, n_cat)}) {
            for (std::size_t f = 0; f < 2; ++f) {
                double lo = 1e300, hi = -1e300;
                for (const auto& s : states) {
                    lo = std::min(lo, s[f]);
                    hi = std::max(hi, s[f]);
                }
                for (double t : schema.features[f].thresholds) {
                    EXPECT_GT(t, lo);
                    EXPECT_LT(t, hi);
                }
            }
            for (int k = 0; k < 500; ++k) {
                const auto& a = states[rng.below(states.size())];
                std::vector<double> b = a;
                b[0] += rng.uniform(0.0, 0.5);
                b[1] += rng.uniform(0.0, 2.0);
                const Levels la = discretize(a, schema);
                const Levels lb = discretize(b, schema);
                EXPECT_LE(la[0], lb[0]);
                EXPECT_LE(la[1], lb[1]);
            }
            if (n_cat == 2) {
                for (const auto& s : states) {
                    const Levels l = discretize(s, schema);
                    for (std::size_t f = 0; f < 2; ++f) {
                        EXPECT_EQ(l[f], s[f] > schema.features[f].thresholds[0] ? 1 : 0);
                    }
                }
            }
        }
    }
}
