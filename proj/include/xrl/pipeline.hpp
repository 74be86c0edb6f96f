#pragma once

// Replay -> per-action summaries -> rules -> metrics.

#include <string>
#include <vector>

#include "xrl/evaluator.hpp"
#include "xrl/rules.hpp"
#include "xrl/summarizer.hpp"

namespace xrl {

enum class PredicateSource { Gini, Quantile };

/// "gini", or "quantile" / "median".
PredicateSource parse_predicate_source(std::string_view s);
std::string to_string(PredicateSource source);

PredicateSchema make_limits(const ReplaySet& rs, int n_cat, PredicateSource source);

struct PipelineConfig {
    double theta = 0.7;
    int k_max = 40;
    std::uint64_t seed = 0;
    WeightKind weight = WeightKind::W2;
    Fallback fallback = Fallback::Approximate;
    EmptyCondition empty = EmptyCondition::Keep;

    Json to_json() const;
};

struct PipelineResult {
    /// One summary per action; actions without records have an empty one.
    std::vector<Summary> summaries;
    ConditionsPerAction conditions;
    RuleSet rules;
    PropertyMetrics properties;
    FidelityMetrics fidelity;
};

/// Summarizes the records of every action with CBS, extracts rules from the
/// union and scores them on the whole replay.
PipelineResult run_pipeline(const ReplaySet& rs, const PredicateSchema& schema,
                            const PipelineConfig& config);

/// Same on records already discretized with `schema`.
PipelineResult run_pipeline_levels(const std::vector<Levels>& levels,
                                   std::span<const ActionId> actions,
                                   const PredicateSchema& schema,
                                   const std::vector<std::string>& action_names,
                                   const PipelineConfig& config);

/// APE conditions for every action (binary schema only); actions that are
/// observed in every state get no condition.
PipelineResult run_ape_pipeline(const ReplaySet& rs, const PredicateSchema& schema,
                                const PipelineConfig& config);

}  // namespace xrl
