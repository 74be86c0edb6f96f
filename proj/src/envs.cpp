#include "xrl/envs.hpp"

#include <algorithm>
#include <cmath>

#include "xrl/rng.hpp"

namespace xrl {

void Environment::set_state(EnvState s) {
    state_ = std::move(s);
    steps_ = 0;
}

// ---------------------------------------------------------------- MountainCar

StepResult mountaincar_transition(std::span<const double> s, ActionId action) {
    if (action < 0 || action > 2) {
        throw InvalidActionError("mountaincar: action " + std::to_string(action) +
                                 " not in {0,1,2}");
    }
    double position = s[0];
    double velocity = s[1];
    velocity += (action - 1) * MountainCar::kForce +
                std::cos(3.0 * position) * (-MountainCar::kGravity);
    velocity = std::clamp(velocity, -MountainCar::kMaxSpeed, MountainCar::kMaxSpeed);
    position += velocity;
    position = std::clamp(position, MountainCar::kMinPosition, MountainCar::kMaxPosition);
    if (position == MountainCar::kMinPosition && velocity < 0.0) velocity = 0.0;

    StepResult r;
    r.done = position >= MountainCar::kGoalPosition && velocity >= 0.0;
    r.reward = -1.0;
    r.next_state = {position, velocity};
    return r;
}

FeatureSchema MountainCar::feature_schema() const {
    FeatureSchema fs;
    fs.names = {"position", "velocity"};
    fs.units = {"m", "m/step"};
    fs.bounds = {FeatureBounds{kMinPosition, kMaxPosition}, FeatureBounds{-kMaxSpeed, kMaxSpeed}};
    return fs;
}

std::vector<std::string> MountainCar::action_names() const {
    return {"push_left", "no_push", "push_right"};
}

EnvState MountainCar::reset(std::uint64_t seed) {
    CounterRng rng(seed, CounterRng::kEnvReset);
    set_state({rng.uniform(-0.6, -0.4), 0.0});
    return state_;
}

StepResult MountainCar::step(ActionId action) {
    StepResult r = mountaincar_transition(state_, action);
    state_ = r.next_state;
    ++steps_;
    r.truncated = !r.done && steps_ >= kMaxSteps;
    return r;
}

// ------------------------------------------------------------------- CartPole

StepResult cartpole_transition(std::span<const double> s, ActionId action) {
    if (action < 0 || action > 1) {
        throw InvalidActionError("cartpole: action " + std::to_string(action) +
                                 " not in {0,1}");
    }
    constexpr double total_mass = CartPole::kCartMass + CartPole::kPoleMass;
    constexpr double polemass_length = CartPole::kPoleMass * CartPole::kHalfLength;

    const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
    const double force = action == 1 ? CartPole::kForceMag : -CartPole::kForceMag;
    const double costheta = std::cos(theta);
    const double sintheta = std::sin(theta);

    const double temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass;
    const double thetaacc =
        (CartPole::kGravity * sintheta - costheta * temp) /
        (CartPole::kHalfLength *
         (4.0 / 3.0 - CartPole::kPoleMass * costheta * costheta / total_mass));
    const double xacc = temp - polemass_length * thetaacc * costheta / total_mass;

    StepResult r;
    r.next_state = {x + CartPole::kTau * x_dot, x_dot + CartPole::kTau * xacc,
                    theta + CartPole::kTau * theta_dot, theta_dot + CartPole::kTau * thetaacc};
    const double nx = r.next_state[0];
    const double ntheta = r.next_state[2];
    r.done = nx < -CartPole::kXLimit || nx > CartPole::kXLimit ||
             ntheta < -CartPole::kThetaLimit || ntheta > CartPole::kThetaLimit;
    r.reward = 1.0;
    return r;
}

FeatureSchema CartPole::feature_schema() const {
    FeatureSchema fs;
    fs.names = {"cart_position", "cart_velocity", "pole_angle", "pole_angular_velocity"};
    fs.units = {"m", "m/s", "rad", "rad/s"};
    fs.bounds = {FeatureBounds{-4.8, 4.8}, std::nullopt,
                 FeatureBounds{-2.0 * kThetaLimit, 2.0 * kThetaLimit}, std::nullopt};
    return fs;
}

std::vector<std::string> CartPole::action_names() const { return {"push_left", "push_right"}; }

EnvState CartPole::reset(std::uint64_t seed) {
    CounterRng rng(seed, CounterRng::kEnvReset);
    EnvState s(4);
    for (double& v : s) v = rng.uniform(-0.05, 0.05);
    set_state(std::move(s));
    return state_;
}

StepResult CartPole::step(ActionId action) {
    StepResult r = cartpole_transition(state_, action);
    state_ = r.next_state;
    ++steps_;
    r.truncated = !r.done && steps_ >= kMaxSteps;
    return r;
}

// -------------------------------------------------------------------- runner

std::unique_ptr<Environment> make_environment(std::string_view name) {
    if (name == "mountaincar" || name == "MountainCar-v0") return std::make_unique<MountainCar>();
    if (name == "cartpole" || name == "CartPole-v1") return std::make_unique<CartPole>();
    throw Error("unknown environment '" + std::string(name) +
                "' (expected mountaincar or cartpole)");
}

double Trajectory::total_reward() const {
    double sum = 0.0;
    for (const auto& t : transitions) sum += t.reward;
    return sum;
}

Trajectory run_episode(Environment& env, const Policy& policy, std::uint64_t seed) {
    Trajectory traj;
    traj.seed = seed;
    EnvState s = env.reset(seed);
    const int n_actions = env.n_actions();
    while (true) {
        const ActionId a = policy(s);
        if (a < 0 || a >= n_actions) {
            throw InvalidActionError(env.name() + ": policy returned action " +
                                     std::to_string(a));
        }
        StepResult r = env.step(a);
        traj.transitions.push_back({std::move(s), a, r.reward, r.done, r.truncated});
        if (r.done || r.truncated) break;
        s = std::move(r.next_state);
    }
    return traj;
}

}  // namespace xrl
