#include <gtest/gtest.h>

#include <cmath>

#include "xrl/envs.hpp"
#include "xrl/rng.hpp"

using namespace xrl;

TEST(MountainCar, PushRightFromRest) {
    const double s[] = {-0.5, 0.0};
    const StepResult r = mountaincar_transition(s, 2);
    const double vel = 0.001 - std::cos(-1.5) * 0.0025;
    EXPECT_DOUBLE_EQ(r.next_state[1], vel);
    EXPECT_NEAR(r.next_state[1], 0.000823, 1e-6);
    EXPECT_NEAR(r.next_state[0], -0.499177, 1e-6);
    EXPECT_EQ(r.reward, -1.0);
    EXPECT_FALSE(r.done);
}

TEST(MountainCar, GoalReached) {
    const double s[] = {0.55, 0.01};
    EXPECT_TRUE(mountaincar_transition(s, 1).done);
}

TEST(MountainCar, LeftWallClamp) {
    const double s[] = {-1.2, -0.05};
    const StepResult r = mountaincar_transition(s, 0);
    EXPECT_EQ(r.next_state[0], -1.2);
    EXPECT_EQ(r.next_state[1], 0.0);
}

TEST(MountainCar, InvalidAction) {
    const double s[] = {-0.5, 0.0};
    EXPECT_THROW(mountaincar_transition(s, 3), InvalidActionError);
    EXPECT_THROW(mountaincar_transition(s, -1), InvalidActionError);
}

TEST(MountainCar, CoastingTruncatesAt200) {
    MountainCar env;
    for (std::uint64_t seed : {0u, 1u, 17u}) {
        const Trajectory t = run_episode(env, [](std::span<const double>) { return 1; }, seed);
        ASSERT_EQ(t.transitions.size(), 200u);
        EXPECT_EQ(t.total_reward(), -200.0);
        EXPECT_TRUE(t.transitions.back().truncated);
        EXPECT_FALSE(t.transitions.back().done);
    }
}

TEST(MountainCar, ResetDistribution) {
    MountainCar env;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const EnvState s = env.reset(seed);
        EXPECT_GE(s[0], -0.6);
        EXPECT_LT(s[0], -0.4);
        EXPECT_EQ(s[1], 0.0);
    }
}

TEST(CartPole, TiltedPoleTerminates) {
    for (ActionId a : {0, 1}) {
        const double s[] = {0.0, 0.0, 0.22, 0.0};
        EXPECT_TRUE(cartpole_transition(s, a).done);
    }
}

TEST(CartPole, PushRightSpinsPoleLeft) {
    const double s[] = {0.0, 0.0, 0.0, 0.0};
    const StepResult r = cartpole_transition(s, 1);
    EXPECT_LT(r.next_state[3], 0.0);
    EXPECT_GT(r.next_state[1], 0.0);
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_THROW(cartpole_transition(s, 2), InvalidActionError);
}

TEST(CartPole, AlwaysLeftFalls) {
    CartPole env;
    const Trajectory t = run_episode(env, [](std::span<const double>) { return 0; }, 0);
    EXPECT_LT(t.transitions.size(), 500u);
    EXPECT_TRUE(t.transitions.back().done);
    EXPECT_FALSE(t.transitions.back().truncated);
}

TEST(Episodes, DeterministicAndWellFormed) {
    for (const char* name : {"mountaincar", "cartpole"}) {
        auto env = make_environment(name);
        const int n = env->n_actions();
        auto policy = [n](std::span<const double> s) {
            return static_cast<ActionId>(static_cast<int>(std::abs(s[1]) * 1e4) % n);
        };
        const Trajectory a = run_episode(*env, policy, 5);
        const Trajectory b = run_episode(*env, policy, 5);
        EXPECT_EQ(a, b) << name;
        ASSERT_FALSE(a.transitions.empty());
        for (std::size_t i = 0; i + 1 < a.transitions.size(); ++i) {
            EXPECT_FALSE(a.transitions[i].done || a.transitions[i].truncated);
        }
        EXPECT_TRUE(a.transitions.back().done || a.transitions.back().truncated);
    }
}

TEST(Episodes, InvalidPolicyActionPropagates) {
    MountainCar env;
    EXPECT_THROW(run_episode(env, [](std::span<const double>) { return 7; }, 0),
                 InvalidActionError);
}

TEST(Episodes, UnknownEnvironment) { EXPECT_THROW(make_environment("lunarlander"), Error); }

TEST(EnvProperties, RandomWalkStaysInBoundsWithConstantReward) {
    CounterRng rng(11, 99);
    MountainCar mc;
    CartPole cp;
    mc.reset(0);
    cp.reset(0);
    std::uint64_t mc_seed = 0, cp_seed = 0;
    for (int i = 0; i < 100000; ++i) {
        const StepResult r = mc.step(static_cast<ActionId>(rng.below(3)));
        ASSERT_EQ(r.reward, -1.0);
        ASSERT_GE(r.next_state[0], -1.2);
        ASSERT_LE(r.next_state[0], 0.6);
        ASSERT_GE(r.next_state[1], -0.07);
        ASSERT_LE(r.next_state[1], 0.07);
        ASSERT_FALSE(r.done && r.truncated);
        if (r.done || r.truncated) mc.reset(++mc_seed);

        const StepResult c = cp.step(static_cast<ActionId>(rng.below(2)));
        ASSERT_EQ(c.reward, 1.0);
        for (double v : c.next_state) ASSERT_TRUE(std::isfinite(v));
        ASSERT_FALSE(c.done && c.truncated);
        if (c.done || c.truncated) cp.reset(++cp_seed);
    }
}

TEST(EnvProperties, SameActionsSameStates) {
    CounterRng rng(5, 5);
    std::vector<ActionId> actions;
    for (int i = 0; i < 150; ++i) actions.push_back(static_cast<ActionId>(rng.below(3)));
    MountainCar a, b;
    a.reset(3);
    b.reset(3);
    for (ActionId act : actions) {
        const auto ra = a.step(act);
        const auto rb = b.step(act);
        ASSERT_EQ(ra.next_state, rb.next_state);
    }
}
