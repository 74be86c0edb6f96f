#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xrl/condition.hpp"
#include "xrl/predicates.hpp"
#include "xrl/replay.hpp"

namespace xrl {

/// Occurrence weights:
///   w1 = N_ca / N_a       share of the action's records under the condition
///   w2 = N_ca / N_c       share of the condition's records taking the action
///   w3 = N_ca / N_total
///   w4 = w1 * w3
enum class WeightKind { W1, W2, W3, W4 };

WeightKind parse_weight_kind(std::string_view s);
std::string to_string(WeightKind kind);

struct RuleCounts {
    std::size_t n_ca = 0;
    std::size_t n_c = 0;
    std::size_t n_a = 0;
    std::size_t n_total = 0;

    bool operator==(const RuleCounts&) const = default;
};

struct Weights {
    std::array<double, 4> w{};
    /// A denominator was zero; the affected weights are 0.
    bool degenerate = false;

    double operator[](WeightKind k) const { return w[static_cast<std::size_t>(k)]; }
};

Weights compute_weights(const RuleCounts& counts);

struct Rule {
    Condition condition;
    ActionId action = 0;
    /// Occurrence o: the selected weight applied to `counts`.
    double occurrence = 0.0;
    RuleCounts counts;
};

enum class Fallback { Approximate, Abstain };

struct RuleSet {
    PredicateSchema schema;
    std::vector<std::string> action_names;
    WeightKind weight_kind = WeightKind::W2;
    Fallback fallback = Fallback::Approximate;
    /// Grouped by action, ascending; within an action in condition order of
    /// the input.
    std::vector<Rule> rules;

    bool empty() const noexcept { return rules.empty(); }
    /// Conditions attached to each action.
    ConditionsPerAction conditions_per_action() const;
};

/// Counts (N_ca, N_c, N_a, N_total) of each (condition, action) pair over
/// `rs` and attaches the occurrence selected by `kind`.
RuleSet extract_rules(const ConditionsPerAction& conds, const ReplaySet& rs,
                      const PredicateSchema& schema, WeightKind kind);

/// Same, on records already discretized with `schema`.
RuleSet extract_rules_levels(const ConditionsPerAction& conds, const std::vector<Levels>& levels,
                             std::span<const ActionId> actions, const PredicateSchema& schema,
                             const std::vector<std::string>& action_names, WeightKind kind);

/// N_ca for every action; their sum is N_c.
std::vector<std::size_t> condition_action_counts(const Condition& c,
                                                 const std::vector<Levels>& levels,
                                                 std::span<const ActionId> actions,
                                                 std::size_t n_actions);

struct Selection {
    /// Empty only in abstain mode when no rule matches.
    std::optional<ActionId> action;
    /// Index into RuleSet::rules of the rule that decided.
    std::size_t rule = 0;
    bool approximated = false;
    double distance = 0.0;
};

/// Among rules matching the discretized state, the action whose best
/// matching rule has the largest occurrence; ties go to the larger N_ca and
/// then the lower action id. Unmatched states go to approximate_levels
/// (or abstain).
Selection select_action(const RuleSet& rules, std::span<const double> state);
Selection select_action_levels(const RuleSet& rules, std::span<const int> levels);

/// Nearest rule by Euclidean distance in level space, each coordinate
/// scaled by 1 / (n_cat - 1); unassigned features contribute nothing and a
/// level set contributes the distance to its closest member. Ties go to the
/// larger occurrence, then the lower action id.
Selection approximate_state(const RuleSet& rules, std::span<const double> state);
Selection approximate_levels(const RuleSet& rules, std::span<const int> levels);

/// Distance used by approximate_levels.
double level_distance(const Condition& c, std::span<const int> levels, int n_cat);

/// rules.json: {weight_kind, fallback, actions, predicates, rules:[{action,
/// assignments, o, counts}]}
void write_rules(const RuleSet& rules, const std::filesystem::path& target);
RuleSet read_rules(const std::filesystem::path& source);

}  // namespace xrl
