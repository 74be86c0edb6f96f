#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xrl/predicates.hpp"

namespace xrl {

/// Bit i set = level i allowed. Supports up to 32 levels.
using LevelMask = std::uint32_t;

constexpr LevelMask level_bit(int level) { return LevelMask{1} << level; }
constexpr LevelMask full_mask(int n_cat) {
    return n_cat >= 32 ? ~LevelMask{0} : (LevelMask{1} << n_cat) - 1;
}

/// Sparse assignment feature -> allowed levels. A record matches when its
/// level for every assigned feature is in the assigned set; unassigned
/// features are wildcards, so the empty condition matches every state.
struct Condition {
    std::map<std::size_t, LevelMask> assignments;
    /// Records of the summarized data matching the condition. Not part of
    /// the condition's identity.
    std::size_t support = 0;

    Condition() = default;
    explicit Condition(std::map<std::size_t, LevelMask> a, std::size_t s = 0)
        : assignments(std::move(a)), support(s) {}

    /// Condition fixing every feature to the given levels.
    static Condition from_levels(const Levels& levels);

    bool matches(std::span<const int> levels) const {
        for (const auto& [f, mask] : assignments) {
            if ((mask & level_bit(levels[f])) == 0) return false;
        }
        return true;
    }

    bool empty() const noexcept { return assignments.empty(); }

    /// Throws SchemaError when a feature index or level is out of range or a
    /// level set is empty.
    void check(const PredicateSchema& schema) const;

    /// Identity comparison: assignments only.
    friend bool operator==(const Condition& a, const Condition& b) {
        return a.assignments == b.assignments;
    }
    friend bool operator<(const Condition& a, const Condition& b) {
        return a.assignments < b.assignments;
    }
};

/// Conditions attached to each action id; index = action.
using ConditionsPerAction = std::vector<std::vector<Condition>>;

/// Machine-readable one-line form, e.g. "position=1 & velocity={2,3}".
std::string describe(const Condition& c, const PredicateSchema& schema);

}  // namespace xrl
