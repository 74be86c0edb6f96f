#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"
#include "xrl/rng.hpp"
#include "xrl/summarizer.hpp"

using namespace xrl;

namespace {

std::vector<Levels> repeat(const std::vector<std::pair<Levels, int>>& groups) {
    std::vector<Levels> out;
    for (const auto& [lv, n] : groups) {
        for (int i = 0; i < n; ++i) out.push_back(lv);
    }
    return out;
}

// Distance of each (k, inertia) point to the chord between the ends.
int chord_elbow(const std::vector<double>& y) {
    const double x1 = 1, y1 = y.front(), x2 = static_cast<double>(y.size()), y2 = y.back();
    int best = 1;
    double best_d = -1.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = static_cast<double>(i + 1);
        const double d = std::abs((y2 - y1) * x - (x2 - x1) * y[i] + x2 * y1 - y2 * x1) /
                         std::hypot(y2 - y1, x2 - x1);
        if (d > best_d + 1e-12) {
            best_d = d;
            best = static_cast<int>(i + 1);
        }
    }
    return best;
}

std::vector<Levels> random_levels(CounterRng& rng, std::size_t n, std::size_t dim, int n_cat) {
    std::vector<Levels> out;
    for (std::size_t i = 0; i < n; ++i) {
        Levels l(dim);
        // skewed so that some states repeat often
        for (auto& v : l) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_cat)) * rng.below(2));
        out.push_back(l);
    }
    return out;
}

}  // namespace

TEST(KMeans, TwoPureClusters) {
    const auto data = repeat({{{0, 0}, 10}, {{3, 3}, 10}});
    const Clustering c = kmeans_fit(data, 2, 0);
    EXPECT_EQ(c.k, 2);
    EXPECT_DOUBLE_EQ(c.inertia, 0.0);
    std::set<std::vector<double>> centroids(c.centroids.begin(), c.centroids.end());
    EXPECT_EQ(centroids, (std::set<std::vector<double>>{{0.0, 0.0}, {3.0, 3.0}}));
    EXPECT_NE(c.assignments.front(), c.assignments.back());
}

TEST(KMeans, SingleClusterIsMean) {
    const auto data = repeat({{{0, 0}, 10}, {{3, 3}, 10}});
    const Clustering c = kmeans_fit(data, 1, 0);
    EXPECT_EQ(c.centroids[0], (std::vector<double>{1.5, 1.5}));
    EXPECT_DOUBLE_EQ(c.inertia, 20 * (1.5 * 1.5 * 2));
}

TEST(KMeans, Deterministic) {
    CounterRng rng(8, 8);
    const auto data = random_levels(rng, 500, 3, 5);
    const Clustering a = kmeans_fit(data, 6, 42);
    const Clustering b = kmeans_fit(data, 6, 42);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.centroids, b.centroids);
}

TEST(KMeans, KReducedToDistinctPoints) {
    const auto data = repeat({{{0}, 5}, {{1}, 5}});
    const Clustering c = kmeans_fit(data, 4, 0);
    EXPECT_EQ(c.k, 2);
    EXPECT_TRUE(c.k_reduced);
    EXPECT_THROW(kmeans_fit({}, 2, 0), Error);
    EXPECT_THROW(kmeans_fit(data, 0, 0), Error);
}

TEST(KMeans, WorkGrowsLinearlyWithDimension) {
    CounterRng rng(2, 2);
    const auto base = random_levels(rng, 400, 3, 5);
    std::vector<Levels> doubled;
    for (const auto& l : base) {
        Levels d = l;
        d.insert(d.end(), l.begin(), l.end());
        doubled.push_back(d);
    }
    const Clustering a = kmeans_fit(base, 5, 1);
    const Clustering b = kmeans_fit(doubled, 5, 1);
    EXPECT_EQ(a.stats.iterations, b.stats.iterations);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_LE(b.stats.coordinate_operations, 2 * a.stats.coordinate_operations);
    EXPECT_EQ(a.stats.distance_evaluations, b.stats.distance_evaluations);
}

TEST(Elbow, ChordOracle) {
    const std::vector<double> curve{100, 40, 20, 18, 17};
    EXPECT_EQ(elbow_from_inertias(curve), chord_elbow(curve));
    EXPECT_EQ(elbow_from_inertias(curve), 2);
    const std::vector<double> later{100, 70, 20, 18, 17};
    EXPECT_EQ(elbow_from_inertias(later), 3);
    EXPECT_EQ(chord_elbow(later), 3);
}

TEST(Elbow, LinearDecayPicksTwo) {
    EXPECT_EQ(elbow_from_inertias({50, 40, 30, 20, 10}), 2);
}

TEST(Elbow, Degenerate) {
    EXPECT_EQ(elbow_from_inertias({7}), 1);
    EXPECT_EQ(choose_k_elbow(repeat({{{1, 1}, 30}}), 40, 0), 1);
}

TEST(Elbow, RandomCurvesAgreeWithOracle) {
    CounterRng rng(6, 6);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> curve{1000.0};
        const std::size_t n = 3 + rng.below(20);
        while (curve.size() < n) curve.push_back(curve.back() * rng.uniform(0.2, 0.99));
        EXPECT_EQ(elbow_from_inertias(curve), chord_elbow(curve));
    }
}

TEST(Inclusion, HandTrace) {
    const std::vector<InstanceCount> sorted{{{1, 0}, 5}, {{1, 1}, 4}, {{0, 0}, 1}};
    EXPECT_EQ(inclusion_prefix(sorted, 0.5), 1u);
    EXPECT_EQ(inclusion_prefix(sorted, 0.9), 2u);
    EXPECT_EQ(inclusion_prefix(sorted, 1.0), 3u);
    EXPECT_EQ(cluster_condition(sorted, 2), Condition({{0, level_bit(1)}}));
    EXPECT_TRUE(cluster_condition(sorted, 3).empty());
    EXPECT_EQ(cluster_condition(sorted, 1), Condition({{0, level_bit(1)}, {1, level_bit(0)}}));
}

TEST(Inclusion, TiesAtBoundaryAreIncluded) {
    const std::vector<InstanceCount> sorted{{{0}, 3}, {{1}, 3}, {{2}, 3}, {{3}, 1}};
    EXPECT_EQ(inclusion_prefix(sorted, 0.2), 3u);
}

TEST(Summarize, OneClusterExample) {
    const auto data = repeat({{{1, 0}, 5}, {{1, 1}, 4}, {{0, 0}, 1}});
    CbsOptions o;
    o.k_max = 1;
    o.theta = 0.9;
    Summary s = summarize_levels(data, 2, o);
    ASSERT_EQ(s.conditions.size(), 1u);
    EXPECT_EQ(s.conditions[0], Condition({{0, level_bit(1)}}));
    EXPECT_EQ(s.conditions[0].support, 9u);

    o.theta = 1.0;
    o.empty = EmptyCondition::Drop;
    s = summarize_levels(data, 2, o);
    EXPECT_TRUE(s.conditions.empty());
    ASSERT_EQ(s.clusters.size(), 1u);
    EXPECT_TRUE(s.clusters[0].dropped);

    o.empty = EmptyCondition::Keep;
    s = summarize_levels(data, 2, o);
    ASSERT_EQ(s.conditions.size(), 1u);
    EXPECT_TRUE(s.conditions[0].empty());
    EXPECT_FALSE(s.clusters[0].dropped);
}

TEST(Summarize, IdenticalDataGivesFullCondition) {
    const auto data = repeat({{{2, 0, 1}, 12}});
    const Summary s = summarize_levels(data, 3, {});
    ASSERT_EQ(s.conditions.size(), 1u);
    EXPECT_EQ(s.conditions[0], Condition::from_levels({2, 0, 1}));
}

TEST(Summarize, EmptyInputIsAnError) {
    try {
        summarize_levels({}, 2, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "no data matches query");
    }
    EXPECT_THROW(summarize_levels(repeat({{{0}, 1}}), 2, CbsOptions{0.0, 40, 0, EmptyCondition::Keep}),
                 Error);
}

TEST(Summarize, ReplayWrapperDiscretizes) {
    const ReplaySet rs = xrl::testing::make_replay({"x"}, {{-1.0}, {-2.0}, {3.0}}, {0, 0, 0}, {"a"});
    PredicateSchema ps;
    ps.n_cat = 2;
    ps.features.push_back({"x", {0.0}, level_labels(2), false});
    const Summary s = summarize_cbs(rs, ps, {});
    EXPECT_FALSE(s.conditions.empty());
    ReplaySet empty = rs;
    empty.records.clear();
    EXPECT_THROW(summarize_cbs(empty, ps, {}), Error);
}

TEST(SummarizeProperties, RandomData) {
    CounterRng rng(12, 12);
    for (int trial = 0; trial < 25; ++trial) {
        const int n_cat = 2 + static_cast<int>(rng.below(4));
        const auto data = random_levels(rng, 50 + rng.below(300), 2 + rng.below(3), n_cat);
        const std::uint64_t seed = rng.below(1000);
        std::vector<Summary> by_theta;
        for (double theta : {0.3, 0.6, 0.9, 1.0}) {
            const Summary s = summarize_levels(data, n_cat, CbsOptions{theta, 10, seed, EmptyCondition::Keep});
            for (const auto& c : s.clusters) {
                for (std::size_t i = 0; i < c.included; ++i) {
                    EXPECT_TRUE(c.condition.matches(c.instances[i].levels));
                }
            }
            for (std::size_t i = 0; i < s.conditions.size(); ++i) {
                for (std::size_t j = i + 1; j < s.conditions.size(); ++j) {
                    EXPECT_FALSE(s.conditions[i] == s.conditions[j]);
                }
            }
            by_theta.push_back(s);
        }
        // clustering does not depend on theta, so clusters line up
        for (std::size_t t = 1; t < by_theta.size(); ++t) {
            ASSERT_EQ(by_theta[t].clusters.size(), by_theta[t - 1].clusters.size());
            for (std::size_t c = 0; c < by_theta[t].clusters.size(); ++c) {
                EXPECT_LE(by_theta[t - 1].clusters[c].included, by_theta[t].clusters[c].included);
            }
        }
    }
}
