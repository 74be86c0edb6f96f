#include "xrl/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace xrl {

void RefineConfig::validate() const {
    if (m < 1) throw Error("refine: m must be at least 1");
    if (budget < 0) throw Error("refine: budget must be at least 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("refine: alpha must lie in (0, 1]");
}

namespace {

// Replay columns reused across candidate evaluations.
struct Workspace {
    const ReplaySet& rs;
    const PipelineConfig& config;
    std::vector<ActionId> actions;

    Workspace(const ReplaySet& r, const PipelineConfig& c) : rs(r), config(c) {
        actions.reserve(rs.size());
        for (const auto& rec : rs.records) actions.push_back(rec.action);
    }

    std::vector<Levels> levels(const PredicateSchema& s) const { return discretize_all(rs, s); }

    PipelineResult run(const PredicateSchema& s) const {
        return run_pipeline_levels(levels(s), actions, s, rs.action_names, config);
    }
};

struct Candidate {
    std::size_t feature = 0;
    std::size_t index = 0;
    double value = 0.0;

    auto key() const { return std::tie(feature, index, value); }
};

bool strictly_increasing(const std::vector<double>& t) {
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i - 1] < t[i])) return false;
    }
    return true;
}

PredicateSchema with_threshold(PredicateSchema s, const Candidate& c) {
    s.features[c.feature].thresholds[c.index] = c.value;
    s.features[c.feature].degenerate = false;
    return s;
}

RefineStep step_of(int iteration, const PredicateSchema& s, const Candidate& c, std::size_t e_dup,
                   double f1) {
    RefineStep st;
    st.iteration = iteration;
    st.feature = s.features[c.feature].name;
    st.index = c.index;
    st.from = s.features[c.feature].thresholds[c.index];
    st.to = c.value;
    st.e_dup = e_dup;
    st.f1 = f1;
    return st;
}

void prepare(const ReplaySet& rs, const PredicateSchema& schema, const RefineConfig& config) {
    config.validate();
    if (rs.empty()) throw Error("refine: replay set is empty");
    schema.validate();
    schema.check_compatible(rs.schema);
}

}  // namespace

RefineResult minimize_duplicates(const ReplaySet& rs, const PredicateSchema& schema,
                                 const PipelineConfig& pipeline, const RefineConfig& config) {
    prepare(rs, schema, config);
    const int budget = config.budget > 0 ? config.budget : 5;
    const Workspace ws(rs, pipeline);

    PredicateSchema current = schema;
    PipelineResult cur = ws.run(current);
    RefineResult out;
    out.input_e_dup = cur.properties.e_dup;
    out.input_f1 = cur.fidelity.f1;

    struct Visited {
        PredicateSchema schema;
        std::size_t e_dup;
        double f1;
    };
    std::vector<Visited> visited{{current, cur.properties.e_dup, cur.fidelity.f1}};

    for (int it = 1; it <= budget; ++it) {
        const auto dups = duplicated_conditions(cur.conditions);
        if (dups.empty()) break;
        out.iterations = it;
        const auto levels = ws.levels(current);

        std::vector<Candidate> cands;
        for (const auto& dup : dups) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (dup.matches(levels[i])) rows.push_back(i);
            }
            if (rows.empty()) continue;
            for (const auto& [f, mask] : dup.assignments) {
                std::vector<double> values;
                std::vector<ActionId> labels;
                for (auto i : rows) {
                    values.push_back(rs.records[i].state[f]);
                    labels.push_back(ws.actions[i]);
                }
                auto splits = gini_tree_splits(values, labels, config.m + 1);
                std::stable_sort(splits.begin(), splits.end(),
                                 [](const GiniSplit& a, const GiniSplit& b) { return a.gain > b.gain; });
                if (splits.size() > static_cast<std::size_t>(config.m)) splits.resize(config.m);
                const auto& t = current.features[f].thresholds;
                for (const auto& sp : splits) {
                    std::size_t nearest = 0;
                    for (std::size_t i = 1; i < t.size(); ++i) {
                        if (std::abs(t[i] - sp.threshold) < std::abs(t[nearest] - sp.threshold)) nearest = i;
                    }
                    Candidate c{f, nearest, sp.threshold};
                    if (t[nearest] == c.value) continue;
                    auto moved = t;
                    moved[nearest] = c.value;
                    if (!strictly_increasing(moved)) continue;
                    cands.push_back(c);
                }
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.key() < b.key(); });
        cands.erase(std::unique(cands.begin(), cands.end(),
                                [](const Candidate& a, const Candidate& b) { return a.key() == b.key(); }),
                    cands.end());

        const double cur_f1 = cur.fidelity.f1;
        std::size_t best = cands.size();
        std::size_t best_step = 0;
        std::vector<PipelineResult> results;
        results.reserve(cands.size());
        for (std::size_t k = 0; k < cands.size(); ++k) {
            results.push_back(ws.run(with_threshold(current, cands[k])));
            const auto& r = results.back();
            out.trace.push_back(step_of(it, current, cands[k], r.properties.e_dup, r.fidelity.f1));
            const bool eligible = config.strict_f1 ? r.fidelity.f1 > cur_f1 : r.fidelity.f1 >= cur_f1;
            if (!eligible) continue;
            if (best == cands.size() || r.properties.e_dup < results[best].properties.e_dup ||
                (r.properties.e_dup == results[best].properties.e_dup &&
                 r.fidelity.f1 > results[best].fidelity.f1)) {
                best = k;
                best_step = out.trace.size() - 1;
            }
        }
        if (best == cands.size()) break;
        out.trace[best_step].adopted = true;
        current = with_threshold(current, cands[best]);
        cur = std::move(results[best]);
        visited.push_back({current, cur.properties.e_dup, cur.fidelity.f1});
    }

    const Visited* pick = &visited.front();
    for (const auto& v : visited) {
        if (v.e_dup < pick->e_dup || (v.e_dup == pick->e_dup && v.f1 > pick->f1)) pick = &v;
    }
    out.schema = pick->schema;
    out.e_dup = pick->e_dup;
    out.f1 = pick->f1;
    return out;
}

RefineResult maximize_f1(const ReplaySet& rs, const PredicateSchema& schema,
                         const PipelineConfig& pipeline, const RefineConfig& config) {
    prepare(rs, schema, config);
    const int budget = config.budget > 0 ? config.budget : 10;
    const Workspace ws(rs, pipeline);

    const std::size_t d = rs.schema.size();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& rec : rs.records) {
        for (std::size_t f = 0; f < d; ++f) {
            lo[f] = std::min(lo[f], rec.state[f]);
            hi[f] = std::max(hi[f], rec.state[f]);
        }
    }

    PredicateSchema current = schema;
    PipelineResult cur = ws.run(current);
    RefineResult out;
    out.input_e_dup = cur.properties.e_dup;
    out.input_f1 = cur.fidelity.f1;

    for (int it = 1; it <= budget; ++it) {
        out.iterations = it;
        std::vector<Candidate> cands;
        for (std::size_t f = 0; f < d; ++f) {
            const auto& t = current.features[f].thresholds;
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double below = i > 0 ? t[i - 1] : lo[f];
                const double above = i + 1 < t.size() ? t[i + 1] : hi[f];
                if (below < t[i]) {
                    double v = t[i] - config.alpha * (t[i] - below);
                    if (i > 0 && v <= t[i - 1]) v = std::nextafter(t[i - 1], t[i]);
                    if (v < t[i]) cands.push_back({f, i, v});
                }
                if (above > t[i]) {
                    double v = t[i] + config.alpha * (above - t[i]);
                    if (i + 1 < t.size() && v >= t[i + 1]) v = std::nextafter(t[i + 1], t[i]);
                    if (v > t[i]) cands.push_back({f, i, v});
                }
            }
        }

        const double cur_f1 = cur.fidelity.f1;
        std::size_t best = cands.size();
        std::size_t best_step = 0;
        std::vector<PipelineResult> results;
        results.reserve(cands.size());
        for (std::size_t k = 0; k < cands.size(); ++k) {
            results.push_back(ws.run(with_threshold(current, cands[k])));
            const auto& r = results.back();
            out.trace.push_back(step_of(it, current, cands[k], r.properties.e_dup, r.fidelity.f1));
            if (r.fidelity.f1 > cur_f1 &&
                (best == cands.size() || r.fidelity.f1 > results[best].fidelity.f1)) {
                best = k;
                best_step = out.trace.size() - 1;
            }
        }
        if (best == cands.size()) break;
        out.trace[best_step].adopted = true;
        current = with_threshold(current, cands[best]);
        cur = std::move(results[best]);
    }

    out.schema = current;
    out.e_dup = cur.properties.e_dup;
    out.f1 = cur.fidelity.f1;
    return out;
}

Json trace_to_json(const RefineResult& r) {
    Json j;
    j["input"] = {{"E_dup", r.input_e_dup}, {"E_F1", r.input_f1}};
    j["output"] = {{"E_dup", r.e_dup}, {"E_F1", r.f1}};
    j["iterations"] = r.iterations;
    Json steps = Json::array();
    for (const auto& s : r.trace) {
        steps.push_back({{"iteration", s.iteration},
                         {"feature", s.feature},
                         {"index", s.index},
                         {"from", s.from},
                         {"to", s.to},
                         {"E_dup", s.e_dup},
                         {"E_F1", s.f1},
                         {"adopted", s.adopted}});
    }
    j["steps"] = std::move(steps);
    j["predicates"] = r.schema;
    return j;
}

void write_trace(const RefineResult& result, const std::filesystem::path& target) {
    write_json_file(trace_to_json(result), target);
}

}  // namespace xrl
