#pragma once

#include <cstdint>
#include <vector>

#include "xrl/condition.hpp"
#include "xrl/predicates.hpp"
#include "xrl/replay.hpp"

namespace xrl {

// ---------------------------------------------------------------- k-means

struct KMeansOptions {
    int max_iterations = 300;
};

/// Work counters, used to check that cost grows linearly with dimension.
struct KMeansStats {
    std::uint64_t distance_evaluations = 0;
    /// distance_evaluations x dimension.
    std::uint64_t coordinate_operations = 0;
    int iterations = 0;
};

struct Clustering {
    /// Cluster of each input point.
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    int k = 0;
    /// Requested k exceeded the number of distinct points and was reduced.
    bool k_reduced = false;
    bool converged = false;
    KMeansStats stats;
};

/// Lloyd's algorithm on level vectors treated as reals, seeded with
/// k-means++ from the kKMeansInit stream. Identical points are folded into
/// weighted points first, which leaves the result unchanged.
Clustering kmeans_fit(const std::vector<Levels>& data, int k, std::uint64_t seed,
                      const KMeansOptions& options = {});

/// Index of the point farthest from the chord joining the first and last
/// points of `inertias` (1-based k); ties go to the smaller k.
int elbow_from_inertias(const std::vector<double>& inertias);

/// Fits k = 1..min(k_max, distinct points) and applies elbow_from_inertias.
int choose_k_elbow(const std::vector<Levels>& data, int k_max, std::uint64_t seed);

// ------------------------------------------------------------ summarizer

struct InstanceCount {
    Levels levels;
    std::size_t count = 0;
};

struct ClusterSummary {
    std::vector<double> centroid;
    std::size_t size = 0;
    /// Unique discrete states, count descending then lexicographic.
    std::vector<InstanceCount> instances;
    /// Length of the included prefix of `instances`.
    std::size_t included = 0;
    Condition condition;
    /// Condition was empty and the cluster dropped (EmptyCondition::Drop).
    bool dropped = false;
};

struct Summary {
    int k = 0;
    double theta = 0.0;
    std::vector<ClusterSummary> clusters;
    /// Distinct conditions, support descending.
    std::vector<Condition> conditions;
};

/// What to do with a cluster whose included instances share no level.
enum class EmptyCondition {
    /// Emit the empty condition, which matches every state.
    Keep,
    /// Drop the cluster.
    Drop,
};

struct CbsOptions {
    double theta = 0.7;
    int k_max = 40;
    std::uint64_t seed = 0;
    EmptyCondition empty = EmptyCondition::Keep;
};

/// Included prefix length for a count-sorted instance list: the shortest
/// prefix reaching theta * total, extended over entries tied with the
/// boundary count.
std::size_t inclusion_prefix(const std::vector<InstanceCount>& sorted, double theta);

/// Levels shared by every included instance of one cluster. `sorted` is the
/// count-descending instance list and `included` its included prefix length.
Condition cluster_condition(const std::vector<InstanceCount>& sorted, std::size_t included);

/// Core of the clustering-based summarizer on already-discretized states.
Summary summarize_levels(const std::vector<Levels>& data, int n_cat, const CbsOptions& options);

/// Discretizes `filtered` with `schema` and summarizes it. Throws when no
/// record is left.
Summary summarize_cbs(const ReplaySet& filtered, const PredicateSchema& schema,
                      const CbsOptions& options);

}  // namespace xrl
