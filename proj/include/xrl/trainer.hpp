#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrl/envs.hpp"
#include "xrl/replay.hpp"

namespace xrl {

struct TrainConfig {
    /// Bins per feature (>= 2 each).
    std::vector<int> bins;
    double alpha = 0.1;
    double gamma = 0.99;
    /// Linear from epsilon_start at the first episode to epsilon_end at the last.
    double epsilon_start = 1.0;
    double epsilon_end = 0.01;
    int episodes = 1000;
    std::uint64_t seed = 0;
    /// Grid range per feature; empty selects default_grid_bounds(env).
    std::vector<FeatureBounds> bounds;
};

/// Schema bounds where the environment declares them; CartPole velocities
/// use +-3.0 and +-3.5 and its angle +-0.21.
std::vector<FeatureBounds> default_grid_bounds(const Environment& env);

/// Greedy policy over a uniform grid.
class TabularPolicy {
public:
    TabularPolicy() = default;
    TabularPolicy(std::string env_name, std::vector<std::vector<double>> edges, int n_actions);

    /// Interior bin edges per feature, strictly increasing.
    const std::vector<std::vector<double>>& edges() const noexcept { return edges_; }
    int n_actions() const noexcept { return n_actions_; }
    const std::string& env_name() const noexcept { return env_name_; }

    /// Flat cell index of a state; out-of-range values fall in the edge bins.
    std::size_t cell(std::span<const double> state) const;
    std::size_t n_cells() const noexcept { return visited_.size(); }

    std::span<double> q(std::size_t cell) { return {q_.data() + cell * n_actions_, static_cast<std::size_t>(n_actions_)}; }
    std::span<const double> q(std::size_t cell) const {
        return {q_.data() + cell * n_actions_, static_cast<std::size_t>(n_actions_)};
    }
    bool visited(std::size_t cell) const { return visited_[cell] != 0; }
    void mark_visited(std::size_t cell) { visited_[cell] = 1; }

    /// argmax_a Q(cell, a), lowest index on ties.
    ActionId act(std::span<const double> state) const;
    Policy as_policy() const;

    bool operator==(const TabularPolicy&) const = default;

private:
    std::string env_name_;
    std::vector<std::vector<double>> edges_;
    int n_actions_ = 0;
    std::vector<double> q_;
    std::vector<std::uint8_t> visited_;
};

struct TrainResult {
    TabularPolicy policy;
    /// Return of every training episode.
    std::vector<double> curve;
};

/// Tabular Q-learning with epsilon-greedy exploration. Reset seeds come from
/// the kTrainingSeeds stream and exploration from kExploration, both keyed by
/// config.seed. Raises TrainingError on non-finite values.
TrainResult train_tabular_q(Environment& env, const TrainConfig& config);

/// Runs episodes with seeds 0, 1, 2, ... until at least `min_steps` records
/// exist, finishing the episode in progress.
ReplaySet collect_replay(Environment& env, const Policy& policy, std::size_t min_steps);

/// policy.json: {env, n_actions, edges, q_table:[{cell:[..], q:[..]}]}; only
/// visited cells are stored.
void write_policy(const TabularPolicy& policy, const std::filesystem::path& target);
TabularPolicy read_policy(const std::filesystem::path& source);

/// curve.csv: episode,return
void write_training_curve(const std::vector<double>& curve, const std::filesystem::path& target);

}  // namespace xrl
