#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "xrl/evaluator.hpp"
#include "xrl/trainer.hpp"

using namespace xrl;
using xrl::testing::TempDir;

namespace {

TrainConfig small_config(std::vector<int> bins, int episodes) {
    TrainConfig c;
    c.bins = std::move(bins);
    c.episodes = episodes;
    return c;
}

}  // namespace

TEST(Trainer, ZeroEpisodesIsAnError) {
    MountainCar env;
    EXPECT_THROW(train_tabular_q(env, small_config({10, 10}, 0)), Error);
}

TEST(Trainer, BadBinsRejected) {
    MountainCar env;
    EXPECT_THROW(train_tabular_q(env, small_config({10}, 5)), Error);
    EXPECT_THROW(train_tabular_q(env, small_config({1, 10}, 5)), Error);
}

TEST(Trainer, DivergenceRaisesTrainingError) {
    MountainCar env;
    TrainConfig c = small_config({4, 4}, 50);
    c.alpha = 1e300;
    c.gamma = 1e300;
    EXPECT_THROW(train_tabular_q(env, c), TrainingError);
}

TEST(Trainer, Deterministic) {
    MountainCar env;
    const TrainConfig c = small_config({20, 20}, 200);
    const TrainResult a = train_tabular_q(env, c);
    const TrainResult b = train_tabular_q(env, c);
    EXPECT_EQ(a.policy, b.policy);
    EXPECT_EQ(a.curve, b.curve);
    EXPECT_EQ(a.curve.size(), 200u);
}

TEST(Trainer, MountainCarReachesGoal) {
    MountainCar env;
    const TrainResult r = train_tabular_q(env, small_config({40, 40}, 20000));
    const auto seeds = default_eval_seeds();
    const PerformanceMetrics perf = eval_performance(r.policy.as_policy(), env, seeds);
    EXPECT_GE(perf.mean_cr, -160.0);
}

TEST(Trainer, CartPoleBalances) {
    CartPole env;
    const TrainResult r = train_tabular_q(env, small_config({10, 10, 10, 10}, 10000));
    const auto seeds = default_eval_seeds();
    const PerformanceMetrics perf = eval_performance(r.policy.as_policy(), env, seeds);
    EXPECT_GE(perf.mean_cr, 400.0);
}

TEST(TabularPolicy, GreedyTieBreakAndPurity) {
    TabularPolicy p("mountaincar", {{0.0}, {0.0}}, 3);
    const double s[] = {0.5, -0.5};
    EXPECT_EQ(p.act(s), 0);
    const auto cell = p.cell(s);
    p.q(cell)[1] = 2.0;
    p.q(cell)[2] = 2.0;
    EXPECT_EQ(p.act(s), 1);
    EXPECT_EQ(p.act(s), p.act(s));
    EXPECT_EQ(p.n_cells(), 4u);
}

TEST(TabularPolicy, CellsClampOutOfRange) {
    TabularPolicy p("mountaincar", {{-1.0, 0.0, 1.0}, {0.5}}, 3);
    const double lo[] = {-100.0, -100.0};
    const double hi[] = {100.0, 100.0};
    EXPECT_EQ(p.cell(lo), 0u);
    EXPECT_EQ(p.cell(hi), p.n_cells() - 1);
}

TEST(TabularPolicy, FileRoundTrip) {
    TempDir dir("pol");
    MountainCar env;
    const TrainResult r = train_tabular_q(env, small_config({12, 12}, 100));
    write_policy(r.policy, dir / "p.json");
    const TabularPolicy back = read_policy(dir / "p.json");
    EXPECT_EQ(back, r.policy);
    write_training_curve(r.curve, dir / "c.csv");
    EXPECT_TRUE(std::filesystem::exists(dir / "c.csv"));
}

TEST(CollectReplay, FinishesTheEpisode) {
    MountainCar env;
    const auto coast = [](std::span<const double>) { return 1; };
    const ReplaySet one = collect_replay(env, coast, 1);
    EXPECT_EQ(one.size(), 200u);
    EXPECT_TRUE(one.records.back().truncated);
    EXPECT_TRUE(one.records.back().done);

    const ReplaySet many = collect_replay(env, coast, 10000);
    EXPECT_GE(many.size(), 10000u);
    EXPECT_TRUE(many.records.back().done);
    EXPECT_EQ(many, collect_replay(env, coast, 10000));
}

TEST(CollectReplay, EpisodeKUsesSeedK) {
    MountainCar env;
    const auto policy = [](std::span<const double> s) { return s[1] < 0 ? 0 : 2; };
    const ReplaySet rs = collect_replay(env, policy, 1000);
    std::int64_t episode = -1;
    for (const auto& r : rs.records) {
        if (r.episode != episode) {
            episode = r.episode;
            MountainCar fresh;
            EXPECT_EQ(r.state, fresh.reset(static_cast<std::uint64_t>(episode)));
            EXPECT_EQ(r.step, 0);
        }
    }
    EXPECT_NO_THROW(rs.validate());
}
