#include "xrl/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "xrl/serialize.hpp"
#include "xrl/text_util.hpp"

namespace xrl {

namespace {

constexpr int kMaxLevels = 16;
constexpr double kGainEpsilon = 1e-9;

double next_up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }

std::string label_key(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == ' ' || c == '_' || c == '-') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

void check_n_cat(int n_cat) {
    if (n_cat < 2 || n_cat > kMaxLevels) {
        throw Error("n_cat must lie in [2, " + std::to_string(kMaxLevels) + "], got " +
                    std::to_string(n_cat));
    }
}

// Column of feature f, plus the action labels.
std::vector<double> feature_values(const ReplaySet& rs, std::size_t f) {
    std::vector<double> v;
    v.reserve(rs.size());
    for (const auto& rec : rs.records) v.push_back(rec.state[f]);
    return v;
}

// Makes thresholds strictly increasing by nudging collisions upwards.
bool enforce_strict(std::vector<double>& t) {
    bool nudged = false;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) {
            t[i] = next_up(t[i - 1]);
            nudged = true;
        }
    }
    return nudged;
}

// A contiguous run [begin, end) of the value-sorted sample.
struct Leaf {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct Candidate {
    bool valid = false;
    std::size_t pos = 0;  // first index of the right child
    double threshold = 0.0;
    double gain = 0.0;
};

double split_point(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    // lo < hi, but the midpoint of adjacent doubles can round up to hi.
    return mid < hi ? mid : lo;
}

Candidate best_split(const std::vector<double>& v, const std::vector<int>& y, int n_classes,
                     Leaf leaf) {
    Candidate best;
    const std::size_t n = leaf.end - leaf.begin;
    if (n < 2) return best;
    std::vector<double> total(n_classes, 0.0), left(n_classes, 0.0);
    for (std::size_t i = leaf.begin; i < leaf.end; ++i) total[y[i]] += 1.0;
    double parent = 0.0;
    for (double c : total) parent += c * c;
    parent /= static_cast<double>(n);

    // sum of squares of the left/right class counts, updated incrementally
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (double c : total) right_sq += c * c;
    for (std::size_t i = leaf.begin + 1; i < leaf.end; ++i) {
        const int c = y[i - 1];
        left_sq += 2.0 * left[c] + 1.0;
        right_sq -= 2.0 * (total[c] - left[c]) - 1.0;
        left[c] += 1.0;
        if (!(v[i - 1] < v[i])) continue;
        const double nl = static_cast<double>(i - leaf.begin);
        const double nr = static_cast<double>(leaf.end - i);
        const double gain = left_sq / nl + right_sq / nr - parent;
        if (gain > kGainEpsilon && (!best.valid || gain > best.gain + kGainEpsilon)) {
            best = {true, i, split_point(v[i - 1], v[i]), gain};
        }
    }
    return best;
}

struct TreeResult {
    std::vector<GiniSplit> splits;
    std::vector<Leaf> leaves;
    std::vector<double> sorted_values;
};

TreeResult grow_tree(std::span<const double> values, std::span<const ActionId> labels,
                     int max_leaves) {
    if (values.size() != labels.size()) throw Error("gini tree: values/labels size mismatch");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    TreeResult out;
    std::vector<int> y(values.size());
    out.sorted_values.resize(values.size());
    int n_classes = 1;
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.sorted_values[i] = values[order[i]];
        y[i] = labels[order[i]];
        if (y[i] < 0) throw Error("gini tree: negative label");
        n_classes = std::max(n_classes, y[i] + 1);
    }
    out.leaves.push_back({0, values.size()});
    std::vector<Candidate> cand{best_split(out.sorted_values, y, n_classes, out.leaves[0])};
    while (static_cast<int>(out.leaves.size()) < max_leaves) {
        std::ptrdiff_t pick = -1;
        for (std::size_t l = 0; l < out.leaves.size(); ++l) {
            if (!cand[l].valid) continue;
            if (pick < 0 || cand[l].gain > cand[pick].gain + kGainEpsilon ||
                (std::abs(cand[l].gain - cand[pick].gain) <= kGainEpsilon &&
                 out.leaves[l].begin < out.leaves[pick].begin)) {
                pick = static_cast<std::ptrdiff_t>(l);
            }
        }
        if (pick < 0) break;
        const Candidate c = cand[pick];
        out.splits.push_back({c.threshold, c.gain});
        const Leaf parent = out.leaves[pick];
        out.leaves[pick] = {parent.begin, c.pos};
        out.leaves.push_back({c.pos, parent.end});
        cand[pick] = best_split(out.sorted_values, y, n_classes, out.leaves[pick]);
        cand.push_back(best_split(out.sorted_values, y, n_classes, out.leaves.back()));
    }
    return out;
}

// Quantile cut strictly inside a leaf holding at least two distinct values.
double fallback_cut(const std::vector<double>& sorted, Leaf leaf) {
    const std::span<const double> part(sorted.data() + leaf.begin, leaf.end - leaf.begin);
    const double lo = part.front();
    const double hi = part.back();
    double t = quantile_sorted(part, 0.5);
    if (t <= lo) {
        const double above = *std::upper_bound(part.begin(), part.end(), lo);
        t = split_point(lo, above);
    } else if (t >= hi) {
        const double below = *(std::lower_bound(part.begin(), part.end(), hi) - 1);
        t = split_point(below, hi);
    }
    return t;
}

}  // namespace

// ------------------------------------------------------------------- schema

std::vector<std::string> level_labels(int n_cat) {
    check_n_cat(n_cat);
    switch (n_cat) {
        case 2: return {"Low", "High"};
        case 3: return {"Low", "Medium", "High"};
        case 4: return {"Extremely Low", "Low", "High", "Extremely High"};
        case 5: return {"Very Low", "Low", "Medium", "High", "Very High"};
        case 6: return {"Extremely Low", "Very Low", "Low", "High", "Very High", "Extremely High"};
        case 7:
            return {"Extremely Low", "Very Low", "Low", "Medium", "High", "Very High",
                    "Extremely High"};
        default: {
            std::vector<std::string> out;
            for (int i = 0; i < n_cat; ++i) out.push_back("Level " + std::to_string(i));
            return out;
        }
    }
}

void PredicateSchema::validate() const {
    check_n_cat(n_cat);
    for (const auto& fp : features) {
        if (fp.thresholds.size() != static_cast<std::size_t>(n_cat - 1)) {
            throw SchemaError("predicate '" + fp.name + "': expected " + std::to_string(n_cat - 1) +
                              " thresholds, got " + std::to_string(fp.thresholds.size()));
        }
        if (fp.labels.size() != static_cast<std::size_t>(n_cat)) {
            throw SchemaError("predicate '" + fp.name + "': expected " + std::to_string(n_cat) +
                              " labels, got " + std::to_string(fp.labels.size()));
        }
        for (std::size_t i = 0; i < fp.thresholds.size(); ++i) {
            if (!std::isfinite(fp.thresholds[i])) {
                throw SchemaError("predicate '" + fp.name + "': non-finite threshold");
            }
            if (i > 0 && !(fp.thresholds[i] > fp.thresholds[i - 1])) {
                throw SchemaError("predicate '" + fp.name + "': thresholds must be strictly increasing");
            }
        }
    }
}

void PredicateSchema::check_compatible(const FeatureSchema& schema) const {
    bool same = features.size() == schema.size();
    for (std::size_t f = 0; same && f < features.size(); ++f) {
        same = features[f].name == schema.names[f];
    }
    if (!same) {
        std::vector<std::string> mine;
        for (const auto& fp : features) mine.push_back(fp.name);
        throw SchemaError("predicate schema features [" + join(mine, ", ") +
                          "] do not match replay features [" + join(schema.names, ", ") + "]");
    }
}

int PredicateSchema::find_label(std::size_t f, std::string_view label) const {
    const std::string key = label_key(label);
    const auto& labels = features.at(f).labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (label_key(labels[i]) == key) return static_cast<int>(i);
    }
    return -1;
}

// --------------------------------------------------------------- discretize

int discretize_value(double value, std::span<const double> thresholds) {
    if (!std::isfinite(value)) throw Error("discretize: non-finite feature value");
    // thresholds are sorted, so the count of t < value is a partition point
    return static_cast<int>(std::lower_bound(thresholds.begin(), thresholds.end(), value) -
                            thresholds.begin());
}

Levels discretize(std::span<const double> state, const PredicateSchema& schema) {
    if (state.size() != schema.size()) {
        throw Error("discretize: state has " + std::to_string(state.size()) +
                    " values, schema has " + std::to_string(schema.size()));
    }
    Levels out(state.size());
    for (std::size_t f = 0; f < state.size(); ++f) {
        out[f] = discretize_value(state[f], schema.features[f].thresholds);
    }
    return out;
}

std::vector<Levels> discretize_all(const ReplaySet& rs, const PredicateSchema& schema) {
    schema.check_compatible(rs.schema);
    std::vector<Levels> out;
    out.reserve(rs.size());
    for (const auto& rec : rs.records) out.push_back(discretize(rec.state, schema));
    return out;
}

// ---------------------------------------------------------------- generators

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error("quantile of empty data");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<GiniSplit> gini_tree_splits(std::span<const double> values,
                                        std::span<const ActionId> labels, int max_leaves) {
    return grow_tree(values, labels, max_leaves).splits;
}

PredicateSchema make_gini_limits(const ReplaySet& rs, int n_cat) {
    check_n_cat(n_cat);
    if (rs.empty()) throw Error("gini limits: replay set is empty");
    if (rs.size() < static_cast<std::size_t>(n_cat)) {
        throw Error("gini limits: need at least n_cat = " + std::to_string(n_cat) + " records");
    }
    std::vector<ActionId> labels;
    labels.reserve(rs.size());
    for (const auto& rec : rs.records) labels.push_back(rec.action);

    PredicateSchema schema;
    schema.n_cat = n_cat;
    schema.source = "gini";
    const auto names = level_labels(n_cat);
    for (std::size_t f = 0; f < rs.schema.size(); ++f) {
        const std::vector<double> values = feature_values(rs, f);
        TreeResult tree = grow_tree(values, labels, n_cat);
        FeaturePredicate fp{rs.schema.names[f], {}, names, false};
        for (const auto& s : tree.splits) fp.thresholds.push_back(s.threshold);

        // pad from the widest leaf that still holds two distinct values
        const auto& sorted = tree.sorted_values;
        while (fp.thresholds.size() < static_cast<std::size_t>(n_cat - 1)) {
            std::ptrdiff_t pick = -1;
            double widest = 0.0;
            for (std::size_t l = 0; l < tree.leaves.size(); ++l) {
                const Leaf lf = tree.leaves[l];
                const double width = sorted[lf.end - 1] - sorted[lf.begin];
                if (width > widest) {
                    widest = width;
                    pick = static_cast<std::ptrdiff_t>(l);
                }
            }
            if (pick < 0) break;
            const Leaf lf = tree.leaves[pick];
            const double t = fallback_cut(sorted, lf);
            const auto cut = static_cast<std::size_t>(
                std::upper_bound(sorted.begin() + lf.begin, sorted.begin() + lf.end, t) -
                sorted.begin());
            tree.leaves[pick] = {lf.begin, cut};
            tree.leaves.push_back({cut, lf.end});
            fp.thresholds.push_back(t);
        }
        std::sort(fp.thresholds.begin(), fp.thresholds.end());
        if (fp.thresholds.empty()) {
            // constant feature: one cut at the value itself
            fp.thresholds.push_back(sorted.front());
            fp.degenerate = true;
        }
        while (fp.thresholds.size() < static_cast<std::size_t>(n_cat - 1)) {
            fp.thresholds.push_back(next_up(fp.thresholds.back()));
            fp.degenerate = true;
        }
        fp.degenerate = enforce_strict(fp.thresholds) || fp.degenerate;
        schema.features.push_back(std::move(fp));
    }
    schema.validate();
    return schema;
}

PredicateSchema make_quantile_limits(const ReplaySet& rs, int n_cat) {
    check_n_cat(n_cat);
    if (rs.empty()) throw Error("quantile limits: replay set is empty");
    PredicateSchema schema;
    schema.n_cat = n_cat;
    schema.source = "quantile";
    const auto names = level_labels(n_cat);
    for (std::size_t f = 0; f < rs.schema.size(); ++f) {
        std::vector<double> values = feature_values(rs, f);
        std::sort(values.begin(), values.end());
        FeaturePredicate fp{rs.schema.names[f], {}, names, false};
        for (int i = 1; i < n_cat; ++i) {
            fp.thresholds.push_back(
                quantile_sorted(values, static_cast<double>(i) / static_cast<double>(n_cat)));
        }
        fp.degenerate = enforce_strict(fp.thresholds) || values.front() == values.back();
        schema.features.push_back(std::move(fp));
    }
    schema.validate();
    return schema;
}

// ---------------------------------------------------------------------- json

void write_predicates(const PredicateSchema& schema, const std::filesystem::path& target) {
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target);
    out << nlohmann::ordered_json(schema).dump(2) << '\n';
    if (!out) throw Error("cannot write '" + target.string() + "'");
}

PredicateSchema read_predicates(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw Error("cannot open predicates file '" + source.string() + "'");
    try {
        PredicateSchema schema = nlohmann::ordered_json::parse(in).get<PredicateSchema>();
        if (schema.source.empty()) schema.source = "expert";
        schema.validate();
        return schema;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("predicates file '" + source.string() + "': " + e.what());
    }
}

}  // namespace xrl
