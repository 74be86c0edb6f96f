#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xrl/condition.hpp"
#include "xrl/predicates.hpp"

namespace xrl {

inline constexpr std::string_view kNoConditionSentence = "no distinguishing condition found";
/// Rendering of the empty condition.
inline constexpr std::string_view kAnyState = "any state";

/// One clause per assigned feature: "<feature> is <label>" for a single
/// level, "above <label>" / "below <label>" / "between <lo> and <hi>" for a
/// contiguous level run, "any level" for the full range. Non-contiguous
/// sets are listed with "or".
std::string render_clause(std::size_t feature, LevelMask mask, const PredicateSchema& schema);

/// Clauses joined by " AND "; several conditions are parenthesised and
/// joined by " OR ". The empty condition renders as kAnyState. Empty input
/// yields kNoConditionSentence.
std::string render_conditions(const std::vector<Condition>& conds, const PredicateSchema& schema);

/// "I take <action_name> when <conditions>", or "I take <action_name> in any
/// state" when the only condition is empty.
std::string render_explanation(const std::vector<Condition>& conds, const PredicateSchema& schema,
                               std::string_view action_name);

/// Reads render_conditions output back into conditions (support is lost).
std::vector<Condition> parse_conditions(std::string_view text, const PredicateSchema& schema);

/// Merges pairs of conditions that differ only in the level set of one
/// feature and whose union is a contiguous run, until no pair merges.
/// An empty condition absorbs the rest. The set of matching states is
/// unchanged.
std::vector<Condition> compress_levels(std::vector<Condition> conds);

}  // namespace xrl
