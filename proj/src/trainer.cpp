#include "xrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "xrl/rng.hpp"
#include "xrl/serialize.hpp"
#include "xrl/text_util.hpp"

namespace xrl {

std::vector<FeatureBounds> default_grid_bounds(const Environment& env) {
    if (env.name() == "cartpole") {
        return {{-2.4, 2.4}, {-3.0, 3.0}, {-0.21, 0.21}, {-3.5, 3.5}};
    }
    const FeatureSchema fs = env.feature_schema();
    std::vector<FeatureBounds> out;
    for (std::size_t f = 0; f < fs.size(); ++f) {
        if (f >= fs.bounds.size() || !fs.bounds[f]) {
            throw Error(env.name() + ": feature '" + fs.names[f] + "' has no bounds for the grid");
        }
        out.push_back(*fs.bounds[f]);
    }
    return out;
}

TabularPolicy::TabularPolicy(std::string env_name, std::vector<std::vector<double>> edges,
                             int n_actions)
    : env_name_(std::move(env_name)), edges_(std::move(edges)), n_actions_(n_actions) {
    if (n_actions_ < 1) throw Error("tabular policy needs at least one action");
    std::size_t cells = 1;
    for (const auto& e : edges_) {
        for (std::size_t i = 1; i < e.size(); ++i) {
            if (!(e[i - 1] < e[i])) throw Error("tabular policy: bin edges must increase");
        }
        cells *= e.size() + 1;
    }
    q_.assign(cells * static_cast<std::size_t>(n_actions_), 0.0);
    visited_.assign(cells, 0);
}

std::size_t TabularPolicy::cell(std::span<const double> state) const {
    if (state.size() != edges_.size()) {
        throw Error("tabular policy: state has " + std::to_string(state.size()) +
                    " features, grid has " + std::to_string(edges_.size()));
    }
    std::size_t idx = 0;
    for (std::size_t f = 0; f < edges_.size(); ++f) {
        const auto& e = edges_[f];
        const auto bin = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), state[f]) - e.begin());
        idx = idx * (e.size() + 1) + bin;
    }
    return idx;
}

ActionId TabularPolicy::act(std::span<const double> state) const {
    const auto values = q(cell(state));
    return static_cast<ActionId>(std::max_element(values.begin(), values.end()) - values.begin());
}

Policy TabularPolicy::as_policy() const {
    return [self = *this](std::span<const double> s) { return self.act(s); };
}

TrainResult train_tabular_q(Environment& env, const TrainConfig& config) {
    if (config.episodes < 1) throw Error("train: episodes must be at least 1");
    const FeatureSchema fs = env.feature_schema();
    if (config.bins.size() != fs.size()) {
        throw Error("train: " + std::to_string(config.bins.size()) + " bin counts given for " +
                    std::to_string(fs.size()) + " features");
    }
    const auto bounds = config.bounds.empty() ? default_grid_bounds(env) : config.bounds;
    if (bounds.size() != fs.size()) throw Error("train: bounds do not match the feature count");

    std::vector<std::vector<double>> edges;
    for (std::size_t f = 0; f < fs.size(); ++f) {
        const int b = config.bins[f];
        if (b < 2) throw Error("train: feature '" + fs.names[f] + "' needs at least 2 bins");
        if (!(bounds[f].min < bounds[f].max)) throw Error("train: inverted bounds");
        std::vector<double> e;
        const double width = (bounds[f].max - bounds[f].min) / b;
        for (int i = 1; i < b; ++i) e.push_back(bounds[f].min + width * i);
        edges.push_back(std::move(e));
    }

    TrainResult result;
    result.policy = TabularPolicy(env.name(), std::move(edges), env.n_actions());
    TabularPolicy& pol = result.policy;
    CounterRng seeds(config.seed, CounterRng::kTrainingSeeds);
    CounterRng explore(config.seed, CounterRng::kExploration);
    const auto n_actions = static_cast<std::uint64_t>(env.n_actions());

    result.curve.reserve(config.episodes);
    for (int ep = 0; ep < config.episodes; ++ep) {
        const double frac = config.episodes > 1 ? static_cast<double>(ep) / (config.episodes - 1) : 0.0;
        const double epsilon = config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
        EnvState s = env.reset(seeds.next_u64());
        std::size_t c = pol.cell(s);
        double ret = 0.0;
        while (true) {
            pol.mark_visited(c);
            ActionId a;
            if (explore.uniform() < epsilon) {
                a = static_cast<ActionId>(explore.below(n_actions));
            } else {
                const auto q = pol.q(c);
                a = static_cast<ActionId>(std::max_element(q.begin(), q.end()) - q.begin());
            }
            const StepResult r = env.step(a);
            ret += r.reward;
            const std::size_t next = pol.cell(r.next_state);
            double target = r.reward;
            if (!r.done) {
                const auto qn = pol.q(next);
                target += config.gamma * *std::max_element(qn.begin(), qn.end());
            }
            double& qa = pol.q(c)[static_cast<std::size_t>(a)];
            qa += config.alpha * (target - qa);
            if (!std::isfinite(qa)) {
                throw TrainingError("train: Q-value diverged in episode " + std::to_string(ep));
            }
            if (r.done || r.truncated) break;
            c = next;
        }
        result.curve.push_back(ret);
    }
    return result;
}

ReplaySet collect_replay(Environment& env, const Policy& policy, std::size_t min_steps) {
    if (min_steps < 1) throw Error("collect: min_steps must be at least 1");
    ReplaySet rs;
    rs.schema = env.feature_schema();
    rs.action_names = env.action_names();
    for (std::uint64_t seed = 0; rs.records.size() < min_steps; ++seed) {
        const Trajectory traj = run_episode(env, policy, seed);
        std::int64_t step = 0;
        for (const auto& t : traj.transitions) {
            ReplayRecord rec;
            rec.episode = static_cast<std::int64_t>(seed);
            rec.step = step++;
            rec.state = t.state;
            rec.action = t.action;
            rec.reward = t.reward;
            rec.done = t.done || t.truncated;
            rec.truncated = t.truncated;
            rs.records.push_back(std::move(rec));
        }
    }
    return rs;
}

void write_policy(const TabularPolicy& policy, const std::filesystem::path& target) {
    Json doc;
    doc["env"] = policy.env_name();
    doc["n_actions"] = policy.n_actions();
    doc["edges"] = policy.edges();
    Json table = Json::array();
    std::vector<std::size_t> dims;
    for (const auto& e : policy.edges()) dims.push_back(e.size() + 1);
    for (std::size_t c = 0; c < policy.n_cells(); ++c) {
        if (!policy.visited(c)) continue;
        std::vector<std::size_t> coords(dims.size());
        std::size_t rest = c;
        for (std::size_t f = dims.size(); f-- > 0;) {
            coords[f] = rest % dims[f];
            rest /= dims[f];
        }
        const auto q = policy.q(c);
        table.push_back({{"cell", coords}, {"q", std::vector<double>(q.begin(), q.end())}});
    }
    doc["q_table"] = std::move(table);
    write_json_file(doc, target);
}

TabularPolicy read_policy(const std::filesystem::path& source) {
    const Json doc = read_json_file(source);
    try {
        TabularPolicy pol(doc.at("env").get<std::string>(),
                          doc.at("edges").get<std::vector<std::vector<double>>>(),
                          doc.at("n_actions").get<int>());
        for (const auto& entry : doc.at("q_table")) {
            const auto coords = entry.at("cell").get<std::vector<std::size_t>>();
            const auto q = entry.at("q").get<std::vector<double>>();
            if (coords.size() != pol.edges().size() || q.size() != static_cast<std::size_t>(pol.n_actions())) {
                throw SchemaError("policy file '" + source.string() + "': malformed q_table entry");
            }
            std::size_t idx = 0;
            for (std::size_t f = 0; f < coords.size(); ++f) {
                const std::size_t dim = pol.edges()[f].size() + 1;
                if (coords[f] >= dim) throw SchemaError("policy file: cell out of range");
                idx = idx * dim + coords[f];
            }
            std::copy(q.begin(), q.end(), pol.q(idx).begin());
            pol.mark_visited(idx);
        }
        return pol;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("policy file '" + source.string() + "': " + e.what());
    }
}

void write_training_curve(const std::vector<double>& curve, const std::filesystem::path& target) {
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    out << "episode,return\n";
    for (std::size_t i = 0; i < curve.size(); ++i) out << i << ',' << format_double(curve[i]) << '\n';
    if (!out) throw Error("cannot write '" + target.string() + "'");
}

}  // namespace xrl
