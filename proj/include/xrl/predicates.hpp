#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrl/replay.hpp"

namespace xrl {

/// Discrete level of every feature; levels[f] lies in [0, n_cat).
using Levels = std::vector<int>;

struct FeaturePredicate {
    std::string name;
    /// Strictly increasing, n_cat - 1 entries.
    std::vector<double> thresholds;
    /// n_cat entries, lowest level first.
    std::vector<std::string> labels;
    /// Set when the data could not supply n_cat - 1 distinct cut points.
    bool degenerate = false;

    bool operator==(const FeaturePredicate&) const = default;
};

struct PredicateSchema {
    int n_cat = 2;
    std::vector<FeaturePredicate> features;
    /// "gini", "quantile" or "expert"; informational.
    std::string source;

    std::size_t size() const noexcept { return features.size(); }
    void validate() const;
    /// Throws SchemaError unless the feature names equal `schema.names` in order.
    void check_compatible(const FeatureSchema& schema) const;
    /// Level index of a label (case-insensitive) for feature f, or -1.
    int find_label(std::size_t f, std::string_view label) const;

    bool operator==(const PredicateSchema&) const = default;
};

/// Display labels for n_cat levels: 2 Low/High, 3 Low/Medium/High,
/// 5 Very Low..Very High; 4, 6 and 7 add Extremely Low/High outermost.
std::vector<std::string> level_labels(int n_cat);

/// levels[f] = number of thresholds of feature f strictly below s[f].
Levels discretize(std::span<const double> state, const PredicateSchema& schema);
int discretize_value(double value, std::span<const double> thresholds);
std::vector<Levels> discretize_all(const ReplaySet& rs, const PredicateSchema& schema);

/// Split chosen by the single-feature Gini tree.
struct GiniSplit {
    double threshold = 0.0;
    /// Weighted impurity decrease, in units of records.
    double gain = 0.0;
};

/// Best-first CART on one feature (value -> action label) with at most
/// `max_leaves` leaves. Returns splits in the order they were made.
std::vector<GiniSplit> gini_tree_splits(std::span<const double> values,
                                        std::span<const ActionId> labels, int max_leaves);

/// Per-feature Gini trees with at most n_cat leaves; missing thresholds are
/// filled from quantiles of the widest remaining leaf.
PredicateSchema make_gini_limits(const ReplaySet& rs, int n_cat);

/// Thresholds at the i/n_cat quantiles (linear interpolation between order
/// statistics).
PredicateSchema make_quantile_limits(const ReplaySet& rs, int n_cat);

/// Linear-interpolation quantile of sorted data, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// predicates.json: {n_cat, source, features:[{name, thresholds, labels, degenerate}]}
void write_predicates(const PredicateSchema& schema, const std::filesystem::path& target);
PredicateSchema read_predicates(const std::filesystem::path& source);

}  // namespace xrl
