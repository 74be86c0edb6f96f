#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xrl/replay.hpp"

namespace xrl {

using EnvState = std::vector<double>;

struct StepResult {
    EnvState next_state;
    double reward = 0.0;
    /// Terminal state reached.
    bool done = false;
    /// Time limit hit without reaching a terminal state.
    bool truncated = false;
};

/// Seedable episodic environment with a discrete action space.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string name() const = 0;
    virtual FeatureSchema feature_schema() const = 0;
    virtual std::vector<std::string> action_names() const = 0;
    virtual int max_steps() const = 0;

    /// Draws the initial state from the reset stream of `seed`.
    virtual EnvState reset(std::uint64_t seed) = 0;
    virtual StepResult step(ActionId action) = 0;

    /// Whether an episode that ended this way accomplished the task.
    virtual bool succeeded(bool done, bool truncated) const = 0;

    int n_actions() const { return static_cast<int>(action_names().size()); }
    const EnvState& state() const noexcept { return state_; }
    int elapsed_steps() const noexcept { return steps_; }

    /// Places the environment in an arbitrary state (step counter reset).
    void set_state(EnvState s);

protected:
    EnvState state_;
    int steps_ = 0;
};

/// MountainCar-v0: state (position, velocity), actions push_left/no_push/push_right.
class MountainCar final : public Environment {
public:
    static constexpr double kMinPosition = -1.2;
    static constexpr double kMaxPosition = 0.6;
    static constexpr double kMaxSpeed = 0.07;
    static constexpr double kGoalPosition = 0.5;
    static constexpr double kForce = 0.001;
    static constexpr double kGravity = 0.0025;
    static constexpr int kMaxSteps = 200;

    std::string name() const override { return "mountaincar"; }
    FeatureSchema feature_schema() const override;
    std::vector<std::string> action_names() const override;
    int max_steps() const override { return kMaxSteps; }
    EnvState reset(std::uint64_t seed) override;
    StepResult step(ActionId action) override;
    bool succeeded(bool done, bool) const override { return done; }
};

/// Pure transition function; truncation is left to the caller.
StepResult mountaincar_transition(std::span<const double> s, ActionId action);

/// CartPole-v1: state (x, x_dot, theta, theta_dot), actions push_left/push_right.
class CartPole final : public Environment {
public:
    static constexpr double kGravity = 9.8;
    static constexpr double kCartMass = 1.0;
    static constexpr double kPoleMass = 0.1;
    static constexpr double kHalfLength = 0.5;
    static constexpr double kForceMag = 10.0;
    static constexpr double kTau = 0.02;
    static constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
    static constexpr double kXLimit = 2.4;
    static constexpr int kMaxSteps = 500;

    std::string name() const override { return "cartpole"; }
    FeatureSchema feature_schema() const override;
    std::vector<std::string> action_names() const override;
    int max_steps() const override { return kMaxSteps; }
    EnvState reset(std::uint64_t seed) override;
    StepResult step(ActionId action) override;
    bool succeeded(bool, bool truncated) const override { return truncated; }
};

StepResult cartpole_transition(std::span<const double> s, ActionId action);

/// "mountaincar" or "cartpole".
std::unique_ptr<Environment> make_environment(std::string_view name);

struct Transition {
    EnvState state;
    ActionId action = 0;
    double reward = 0.0;
    bool done = false;
    bool truncated = false;

    bool operator==(const Transition&) const = default;
};

struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<Transition> transitions;

    double total_reward() const;
    bool operator==(const Trajectory&) const = default;
};

using Policy = std::function<ActionId(std::span<const double>)>;

/// Resets with `seed` and steps until done or truncated. An out-of-range
/// action from the policy raises InvalidActionError.
Trajectory run_episode(Environment& env, const Policy& policy, std::uint64_t seed);

}  // namespace xrl
