#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xrl/condition.hpp"
#include "xrl/predicates.hpp"
#include "xrl/replay.hpp"

namespace xrl {

/// Quine-McCluskey cube. Variable 0 is the most significant bit of a
/// minterm id; `mask` bits are dashes.
struct Implicant {
    std::uint32_t value = 0;
    std::uint32_t mask = 0;
    int nvars = 0;

    bool covers(std::uint32_t minterm) const { return (minterm & ~mask) == value; }
    bool is_tautology() const { return mask == (nvars >= 32 ? ~0u : (1u << nvars) - 1u); }
    /// '0', '1' or '-' per variable, variable 0 first.
    std::string pattern() const;
    /// Minterms covered, ascending.
    std::vector<std::uint32_t> minterms() const;

    bool operator==(const Implicant&) const = default;
};

constexpr int kMaxQmVariables = 20;

/// Prime implicants, then essentials, then a greedy cover of what remains
/// (most uncovered onset minterms first, pattern order on ties). Covers the
/// onset exactly, may use the don't-care set, never touches the off-set.
std::vector<Implicant> qm_minimize(const std::vector<std::uint32_t>& onset,
                                   const std::vector<std::uint32_t>& dcset, int nvars);

/// All prime implicants of onset + dcset that cover at least one onset minterm.
std::vector<Implicant> prime_implicants(const std::vector<std::uint32_t>& onset,
                                        const std::vector<std::uint32_t>& dcset, int nvars);

/// Minterm id of a binary discrete state (feature 0 = most significant bit).
std::uint32_t minterm_of(const Levels& levels);

struct ApeResult {
    std::vector<Condition> conditions;
    /// Minimization collapsed to the all-dash cube: the action occurs in
    /// every state, so nothing distinguishes it.
    bool no_explanation = false;
};

/// APE explanation for one action. Onset = binary states observed with the
/// action; don't-cares = states never observed under any action.
ApeResult ape_explain(const ReplaySet& rs, ActionId action, const PredicateSchema& schema);

}  // namespace xrl
