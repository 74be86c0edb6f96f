#include "xrl/pipeline.hpp"

#include "xrl/ape.hpp"
#include "xrl/text_util.hpp"

namespace xrl {

PredicateSource parse_predicate_source(std::string_view s) {
    if (iequals(s, "gini")) return PredicateSource::Gini;
    if (iequals(s, "quantile") || iequals(s, "median")) return PredicateSource::Quantile;
    throw Error("unknown predicate source '" + std::string(s) + "' (expected gini or median)");
}

std::string to_string(PredicateSource source) {
    return source == PredicateSource::Gini ? "gini" : "median";
}

PredicateSchema make_limits(const ReplaySet& rs, int n_cat, PredicateSource source) {
    return source == PredicateSource::Gini ? make_gini_limits(rs, n_cat)
                                           : make_quantile_limits(rs, n_cat);
}

Json PipelineConfig::to_json() const {
    Json j;
    j["theta"] = theta;
    j["k_max"] = k_max;
    j["seed"] = seed;
    j["weights"] = to_string(weight);
    j["fallback"] = fallback == Fallback::Approximate ? "approximate" : "abstain";
    j["empty_conditions"] = empty == EmptyCondition::Keep ? "keep" : "drop";
    return j;
}

PipelineResult run_pipeline_levels(const std::vector<Levels>& levels,
                                   std::span<const ActionId> actions,
                                   const PredicateSchema& schema,
                                   const std::vector<std::string>& action_names,
                                   const PipelineConfig& config) {
    if (levels.empty()) throw Error("pipeline: replay set is empty");
    const std::size_t n_actions = action_names.size();
    std::vector<std::vector<Levels>> per_action(n_actions);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        per_action.at(static_cast<std::size_t>(actions[i])).push_back(levels[i]);
    }

    PipelineResult out;
    const CbsOptions opts{config.theta, config.k_max, config.seed, config.empty};
    out.summaries.resize(n_actions);
    out.conditions.resize(n_actions);
    for (std::size_t a = 0; a < n_actions; ++a) {
        if (per_action[a].empty()) continue;
        out.summaries[a] = summarize_levels(per_action[a], schema.n_cat, opts);
        out.conditions[a] = out.summaries[a].conditions;
    }
    out.rules = extract_rules_levels(out.conditions, levels, actions, schema, action_names,
                                     config.weight);
    out.rules.fallback = config.fallback;
    out.properties = eval_properties(out.conditions);
    if (!out.rules.empty()) out.fidelity = eval_fidelity_levels(out.rules, levels, actions);
    return out;
}

PipelineResult run_pipeline(const ReplaySet& rs, const PredicateSchema& schema,
                            const PipelineConfig& config) {
    if (rs.empty()) throw Error("pipeline: replay set is empty");
    schema.check_compatible(rs.schema);
    const auto levels = discretize_all(rs, schema);
    std::vector<ActionId> actions;
    actions.reserve(rs.size());
    for (const auto& r : rs.records) actions.push_back(r.action);
    return run_pipeline_levels(levels, actions, schema, rs.action_names, config);
}

PipelineResult run_ape_pipeline(const ReplaySet& rs, const PredicateSchema& schema,
                                const PipelineConfig& config) {
    if (rs.empty()) throw Error("pipeline: replay set is empty");
    schema.check_compatible(rs.schema);
    PipelineResult out;
    out.conditions.resize(rs.n_actions());
    for (std::size_t a = 0; a < rs.n_actions(); ++a) {
        out.conditions[a] = ape_explain(rs, static_cast<ActionId>(a), schema).conditions;
    }
    out.rules = extract_rules(out.conditions, rs, schema, config.weight);
    out.rules.fallback = config.fallback;
    out.properties = eval_properties(out.conditions);
    if (!out.rules.empty()) out.fidelity = eval_fidelity(out.rules, rs);
    return out;
}

}  // namespace xrl
