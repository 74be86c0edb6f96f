#include "xrl/summarizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "xrl/rng.hpp"

namespace xrl {

namespace {

// Distinct points with multiplicities.
struct WeightedPoints {
    std::vector<std::vector<double>> points;
    std::vector<double> weights;
    std::vector<int> index_of;  // input item -> distinct point
    std::size_t dim = 0;
};

WeightedPoints fold(const std::vector<Levels>& data) {
    std::map<Levels, int> ids;
    for (const auto& x : data) ids.emplace(x, 0);
    WeightedPoints wp;
    wp.dim = data.front().size();
    int next = 0;
    for (auto& [levels, id] : ids) {
        id = next++;
        wp.points.emplace_back(levels.begin(), levels.end());
    }
    wp.weights.assign(wp.points.size(), 0.0);
    wp.index_of.reserve(data.size());
    for (const auto& x : data) {
        if (x.size() != wp.dim) throw Error("kmeans: points of different dimension");
        const int id = ids.at(x);
        wp.index_of.push_back(id);
        wp.weights[id] += 1.0;
    }
    return wp;
}

class Distances {
public:
    explicit Distances(std::size_t dim, KMeansStats& stats) : dim_(dim), stats_(stats) {}

    double squared(const std::vector<double>& a, const std::vector<double>& b) {
        ++stats_.distance_evaluations;
        stats_.coordinate_operations += dim_;
        double s = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return s;
    }

private:
    std::size_t dim_;
    KMeansStats& stats_;
};

// Weighted sampling index proportional to `w` (sum > 0).
std::size_t sample(const std::vector<double>& w, CounterRng& rng) {
    double total = 0.0;
    for (double x : w) total += x;
    const double r = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        last_positive = i;
        acc += w[i];
        if (r < acc) return i;
    }
    return last_positive;
}

std::vector<std::vector<double>> kmeans_plus_plus(const WeightedPoints& wp, int k,
                                                  CounterRng& rng, Distances& dist) {
    std::vector<std::vector<double>> centroids;
    centroids.push_back(wp.points[sample(wp.weights, rng)]);
    std::vector<double> closest(wp.points.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(centroids.size()) < k) {
        std::vector<double> w(wp.points.size());
        for (std::size_t i = 0; i < wp.points.size(); ++i) {
            closest[i] = std::min(closest[i], dist.squared(wp.points[i], centroids.back()));
            w[i] = wp.weights[i] * closest[i];
        }
        centroids.push_back(wp.points[sample(w, rng)]);
    }
    return centroids;
}

std::vector<int> assign(const WeightedPoints& wp, const std::vector<std::vector<double>>& centroids,
                        Distances& dist, std::vector<double>& d2) {
    std::vector<int> a(wp.points.size(), 0);
    d2.assign(wp.points.size(), 0.0);
    for (std::size_t i = 0; i < wp.points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = dist.squared(wp.points[i], centroids[c]);
            if (d < best) {
                best = d;
                a[i] = static_cast<int>(c);
            }
        }
        d2[i] = best;
    }
    return a;
}

// Means of the assigned points. An empty cluster takes over the point that
// is currently worst served.
void update(const WeightedPoints& wp, std::vector<int>& a, std::vector<double>& d2,
            std::vector<std::vector<double>>& centroids) {
    const std::size_t k = centroids.size();
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) mass[a[i]] += wp.weights[i];
    for (std::size_t c = 0; c < k; ++c) {
        if (mass[c] > 0.0) continue;
        // only points whose cluster keeps other members may move
        std::ptrdiff_t pick = -1;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (mass[a[i]] <= wp.weights[i]) continue;
            if (pick < 0 || d2[i] > d2[pick]) pick = static_cast<std::ptrdiff_t>(i);
        }
        if (pick < 0) throw Error("kmeans: cannot refill an empty cluster");
        const auto worst = static_cast<std::size_t>(pick);
        mass[a[worst]] -= wp.weights[worst];
        a[worst] = static_cast<int>(c);
        d2[worst] = 0.0;
        mass[c] = wp.weights[worst];
    }
    for (auto& cen : centroids) std::fill(cen.begin(), cen.end(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < wp.dim; ++j) centroids[a[i]][j] += wp.weights[i] * wp.points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (double& v : centroids[c]) v /= mass[c];
    }
}

}  // namespace

Clustering kmeans_fit(const std::vector<Levels>& data, int k, std::uint64_t seed,
                      const KMeansOptions& options) {
    if (data.empty()) throw Error("kmeans: no data");
    if (k < 1) throw Error("kmeans: k must be at least 1");
    const WeightedPoints wp = fold(data);

    Clustering out;
    out.k = std::min<int>(k, static_cast<int>(wp.points.size()));
    out.k_reduced = out.k < k;
    Distances dist(wp.dim, out.stats);
    CounterRng rng(seed, CounterRng::kKMeansInit);

    out.centroids = kmeans_plus_plus(wp, out.k, rng, dist);
    std::vector<double> d2;
    std::vector<int> a = assign(wp, out.centroids, dist, d2);
    for (int it = 1; it <= options.max_iterations; ++it) {
        update(wp, a, d2, out.centroids);
        std::vector<int> next = assign(wp, out.centroids, dist, d2);
        out.stats.iterations = it;
        if (next == a) {
            out.converged = true;
            break;
        }
        a = std::move(next);
    }
    update(wp, a, d2, out.centroids);

    out.inertia = 0.0;
    for (std::size_t i = 0; i < wp.points.size(); ++i) {
        out.inertia += wp.weights[i] * dist.squared(wp.points[i], out.centroids[a[i]]);
    }
    out.assignments.reserve(data.size());
    for (int id : wp.index_of) out.assignments.push_back(a[id]);
    return out;
}

int elbow_from_inertias(const std::vector<double>& inertias) {
    const int n = static_cast<int>(inertias.size());
    if (n <= 2) return std::max(n, 1);
    const double dx = n - 1;
    const double dy = inertias.back() - inertias.front();
    const double norm = std::hypot(dx, dy);
    int best_k = 2;
    double best = -1.0;
    for (int k = 2; k < n; ++k) {
        const double d =
            std::abs(dx * (inertias[k - 1] - inertias.front()) - dy * (k - 1)) / norm;
        if (d > best + 1e-12 * std::max(1.0, std::abs(best))) {
            best = d;
            best_k = k;
        }
    }
    return best_k;
}

int choose_k_elbow(const std::vector<Levels>& data, int k_max, std::uint64_t seed) {
    if (k_max < 1) throw Error("elbow: k_max must be at least 1");
    if (data.empty()) throw Error("elbow: no data");
    const std::size_t distinct = std::set<Levels>(data.begin(), data.end()).size();
    if (distinct < 2) return 1;
    const int upper = std::min<int>(k_max, static_cast<int>(distinct));
    std::vector<double> inertias;
    inertias.reserve(upper);
    for (int k = 1; k <= upper; ++k) inertias.push_back(kmeans_fit(data, k, seed).inertia);
    return elbow_from_inertias(inertias);
}

std::size_t inclusion_prefix(const std::vector<InstanceCount>& sorted, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw Error("theta must lie in (0, 1]");
    double total = 0.0;
    for (const auto& ic : sorted) total += static_cast<double>(ic.count);
    const double target = theta * total - 1e-9 * total;
    double cum = 0.0;
    std::size_t len = 0;
    while (len < sorted.size()) {
        cum += static_cast<double>(sorted[len].count);
        ++len;
        if (cum >= target) break;
    }
    while (len > 0 && len < sorted.size() && sorted[len].count == sorted[len - 1].count) ++len;
    return len;
}

Condition cluster_condition(const std::vector<InstanceCount>& sorted, std::size_t included) {
    Condition c;
    if (sorted.empty() || included == 0) return c;
    const std::size_t dim = sorted.front().levels.size();
    for (std::size_t f = 0; f < dim; ++f) {
        const int v = sorted.front().levels[f];
        bool unanimous = true;
        for (std::size_t i = 1; i < included && unanimous; ++i) {
            unanimous = sorted[i].levels[f] == v;
        }
        if (unanimous) c.assignments.emplace(f, level_bit(v));
    }
    return c;
}

Summary summarize_levels(const std::vector<Levels>& data, int n_cat, const CbsOptions& options) {
    if (!(options.theta > 0.0 && options.theta <= 1.0)) throw Error("theta must lie in (0, 1]");
    if (data.empty()) throw Error("no data matches query");
    const std::size_t dim = data.front().size();
    for (const auto& x : data) {
        if (x.size() != dim) throw Error("summarize: states of different dimension");
        for (int l : x) {
            if (l < 0 || l >= n_cat) throw Error("summarize: level out of range for n_cat");
        }
    }

    Summary summary;
    summary.theta = options.theta;
    summary.k = choose_k_elbow(data, options.k_max, options.seed);
    const Clustering clustering = kmeans_fit(data, summary.k, options.seed);
    summary.k = clustering.k;

    std::vector<std::map<Levels, std::size_t>> counts(clustering.k);
    for (std::size_t i = 0; i < data.size(); ++i) ++counts[clustering.assignments[i]][data[i]];

    std::set<Condition> seen;
    for (int c = 0; c < clustering.k; ++c) {
        ClusterSummary cs;
        cs.centroid = clustering.centroids[c];
        for (const auto& [levels, n] : counts[c]) {
            cs.instances.push_back({levels, n});
            cs.size += n;
        }
        // map order is lexicographic, so a stable sort keeps it within ties
        std::stable_sort(cs.instances.begin(), cs.instances.end(),
                         [](const auto& a, const auto& b) { return a.count > b.count; });
        cs.included = inclusion_prefix(cs.instances, options.theta);

        cs.condition = cluster_condition(cs.instances, cs.included);
        cs.dropped = cs.condition.empty() && options.empty == EmptyCondition::Drop;
        if (!cs.dropped) seen.insert(Condition(cs.condition.assignments));
        summary.clusters.push_back(std::move(cs));
    }

    std::map<Levels, std::size_t> all;
    for (const auto& x : data) ++all[x];
    for (const auto& cond : seen) {
        Condition c(cond.assignments);
        for (const auto& [levels, n] : all) {
            if (c.matches(levels)) c.support += n;
        }
        summary.conditions.push_back(std::move(c));
    }
    std::stable_sort(summary.conditions.begin(), summary.conditions.end(),
                     [](const auto& a, const auto& b) { return a.support > b.support; });
    for (auto& cs : summary.clusters) {
        for (const auto& c : summary.conditions) {
            if (c == cs.condition) cs.condition.support = c.support;
        }
    }
    return summary;
}

Summary summarize_cbs(const ReplaySet& filtered, const PredicateSchema& schema,
                      const CbsOptions& options) {
    schema.check_compatible(filtered.schema);
    if (filtered.empty()) throw Error("no data matches query");
    return summarize_levels(discretize_all(filtered, schema), schema.n_cat, options);
}

}  // namespace xrl
