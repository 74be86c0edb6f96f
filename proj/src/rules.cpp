#include "xrl/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "xrl/serialize.hpp"
#include "xrl/text_util.hpp"

namespace xrl {

namespace {

// Unique discrete states with per-action record counts.
struct StateTable {
    std::vector<Levels> states;
    std::vector<std::vector<std::size_t>> per_action;
};

StateTable tabulate(const std::vector<Levels>& levels, std::span<const ActionId> actions,
                    std::size_t n_actions) {
    std::map<Levels, std::vector<std::size_t>> table;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        auto& row = table[levels[i]];
        if (row.empty()) row.assign(n_actions, 0);
        row[static_cast<std::size_t>(actions[i])] += 1;
    }
    StateTable t;
    for (auto& [s, counts] : table) {
        t.states.push_back(s);
        t.per_action.push_back(std::move(counts));
    }
    return t;
}

// Whether candidate (o, n_ca, action) beats the incumbent in select_action.
bool better_match(double o, std::size_t n_ca, ActionId a, double best_o, std::size_t best_n,
                  ActionId best_a) {
    if (o != best_o) return o > best_o;
    if (n_ca != best_n) return n_ca > best_n;
    return a < best_a;
}

}  // namespace

WeightKind parse_weight_kind(std::string_view s) {
    if (iequals(s, "w1")) return WeightKind::W1;
    if (iequals(s, "w2")) return WeightKind::W2;
    if (iequals(s, "w3")) return WeightKind::W3;
    if (iequals(s, "w4")) return WeightKind::W4;
    throw Error("unknown weight kind '" + std::string(s) + "' (expected w1..w4)");
}

std::string to_string(WeightKind kind) {
    return "w" + std::to_string(static_cast<int>(kind) + 1);
}

Weights compute_weights(const RuleCounts& c) {
    Weights w;
    const auto ratio = [&](std::size_t num, std::size_t den) {
        if (den == 0) {
            w.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    w.w[0] = ratio(c.n_ca, c.n_a);
    w.w[1] = ratio(c.n_ca, c.n_c);
    w.w[2] = ratio(c.n_ca, c.n_total);
    w.w[3] = w.w[0] * w.w[2];
    return w;
}

ConditionsPerAction RuleSet::conditions_per_action() const {
    ConditionsPerAction out(action_names.size());
    for (const auto& r : rules) {
        if (static_cast<std::size_t>(r.action) >= out.size()) out.resize(r.action + 1);
        out[r.action].push_back(r.condition);
    }
    return out;
}

std::vector<std::size_t> condition_action_counts(const Condition& c,
                                                 const std::vector<Levels>& levels,
                                                 std::span<const ActionId> actions,
                                                 std::size_t n_actions) {
    std::vector<std::size_t> counts(n_actions, 0);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (c.matches(levels[i])) ++counts[static_cast<std::size_t>(actions[i])];
    }
    return counts;
}

RuleSet extract_rules_levels(const ConditionsPerAction& conds, const std::vector<Levels>& levels,
                             std::span<const ActionId> actions, const PredicateSchema& schema,
                             const std::vector<std::string>& action_names, WeightKind kind) {
    if (levels.empty()) throw Error("extract_rules: replay set is empty");
    if (conds.size() > action_names.size()) {
        throw Error("extract_rules: conditions given for more actions than the replay names");
    }
    const std::size_t n_actions = action_names.size();
    const StateTable table = tabulate(levels, actions, n_actions);
    std::vector<std::size_t> n_a(n_actions, 0);
    for (ActionId a : actions) ++n_a[static_cast<std::size_t>(a)];

    RuleSet rs;
    rs.schema = schema;
    rs.action_names = action_names;
    rs.weight_kind = kind;
    for (std::size_t a = 0; a < conds.size(); ++a) {
        std::vector<Condition> seen;
        for (const auto& cond : conds[a]) {
            cond.check(schema);
            if (std::find(seen.begin(), seen.end(), cond) != seen.end()) continue;
            seen.push_back(cond);
            Rule rule;
            rule.condition = cond;
            rule.action = static_cast<ActionId>(a);
            rule.counts.n_total = levels.size();
            rule.counts.n_a = n_a[a];
            for (std::size_t s = 0; s < table.states.size(); ++s) {
                if (!cond.matches(table.states[s])) continue;
                for (std::size_t b = 0; b < n_actions; ++b) rule.counts.n_c += table.per_action[s][b];
                rule.counts.n_ca += table.per_action[s][a];
            }
            rule.occurrence = compute_weights(rule.counts)[kind];
            rs.rules.push_back(std::move(rule));
        }
    }
    return rs;
}

RuleSet extract_rules(const ConditionsPerAction& conds, const ReplaySet& rs,
                      const PredicateSchema& schema, WeightKind kind) {
    if (rs.empty()) throw Error("extract_rules: replay set is empty");
    const std::vector<Levels> levels = discretize_all(rs, schema);
    std::vector<ActionId> actions;
    actions.reserve(rs.size());
    for (const auto& rec : rs.records) actions.push_back(rec.action);
    return extract_rules_levels(conds, levels, actions, schema, rs.action_names, kind);
}

double level_distance(const Condition& c, std::span<const int> levels, int n_cat) {
    const double scale = n_cat > 1 ? 1.0 / static_cast<double>(n_cat - 1) : 1.0;
    double sum = 0.0;
    for (const auto& [f, mask] : c.assignments) {
        int nearest = std::numeric_limits<int>::max();
        for (int l = 0; l < n_cat; ++l) {
            if (mask & level_bit(l)) nearest = std::min(nearest, std::abs(levels[f] - l));
        }
        const double d = nearest * scale;
        sum += d * d;
    }
    return std::sqrt(sum);
}

Selection approximate_levels(const RuleSet& rules, std::span<const int> levels) {
    if (rules.empty()) throw Error("approximate_state: rule set has no rules");
    Selection sel;
    sel.approximated = true;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rules.rules.size(); ++i) {
        const Rule& r = rules.rules[i];
        const double d = level_distance(r.condition, levels, rules.schema.n_cat);
        bool take = false;
        if (!sel.action || d < best_d) {
            take = true;
        } else if (d == best_d) {
            const Rule& cur = rules.rules[sel.rule];
            take = r.occurrence > cur.occurrence ||
                   (r.occurrence == cur.occurrence && r.action < cur.action);
        }
        if (take) {
            best_d = d;
            sel.action = r.action;
            sel.rule = i;
            sel.distance = d;
        }
    }
    return sel;
}

Selection select_action_levels(const RuleSet& rules, std::span<const int> levels) {
    if (rules.empty()) throw Error("select_action: rule set has no rules");
    Selection sel;
    for (std::size_t i = 0; i < rules.rules.size(); ++i) {
        const Rule& r = rules.rules[i];
        if (!r.condition.matches(levels)) continue;
        if (!sel.action) {
            sel.action = r.action;
            sel.rule = i;
            continue;
        }
        const Rule& cur = rules.rules[sel.rule];
        if (better_match(r.occurrence, r.counts.n_ca, r.action, cur.occurrence, cur.counts.n_ca,
                         cur.action)) {
            sel.action = r.action;
            sel.rule = i;
        }
    }
    if (sel.action) return sel;
    if (rules.fallback == Fallback::Abstain) return sel;
    return approximate_levels(rules, levels);
}

Selection select_action(const RuleSet& rules, std::span<const double> state) {
    const Levels levels = discretize(state, rules.schema);
    return select_action_levels(rules, levels);
}

Selection approximate_state(const RuleSet& rules, std::span<const double> state) {
    const Levels levels = discretize(state, rules.schema);
    return approximate_levels(rules, levels);
}

// ---------------------------------------------------------------------- json

void write_rules(const RuleSet& rules, const std::filesystem::path& target) {
    Json doc;
    doc["weight_kind"] = to_string(rules.weight_kind);
    doc["fallback"] = rules.fallback == Fallback::Approximate ? "approximate" : "abstain";
    doc["actions"] = rules.action_names;
    doc["predicates"] = rules.schema;
    Json list = Json::array();
    for (const auto& r : rules.rules) {
        Json j;
        j["action"] = r.action;
        j["action_name"] = rules.action_names.at(r.action);
        j["assignments"] = assignments_to_json(r.condition, rules.schema);
        j["o"] = r.occurrence;
        j["counts"] = {{"N_ca", r.counts.n_ca},
                       {"N_c", r.counts.n_c},
                       {"N_a", r.counts.n_a},
                       {"N_total", r.counts.n_total}};
        list.push_back(std::move(j));
    }
    doc["rules"] = std::move(list);
    write_json_file(doc, target);
}

RuleSet read_rules(const std::filesystem::path& source) {
    const Json doc = read_json_file(source);
    try {
        RuleSet rs;
        rs.weight_kind = parse_weight_kind(doc.at("weight_kind").get<std::string>());
        rs.fallback = doc.value("fallback", std::string("approximate")) == "abstain"
                          ? Fallback::Abstain
                          : Fallback::Approximate;
        rs.action_names = doc.at("actions").get<std::vector<std::string>>();
        rs.schema = doc.at("predicates").get<PredicateSchema>();
        rs.schema.validate();
        for (const auto& j : doc.at("rules")) {
            Rule r;
            r.action = j.at("action").get<ActionId>();
            if (r.action < 0 || static_cast<std::size_t>(r.action) >= rs.action_names.size()) {
                throw SchemaError("rule action " + std::to_string(r.action) + " has no name");
            }
            r.condition = assignments_from_json(j.at("assignments"), rs.schema);
            r.occurrence = j.at("o").get<double>();
            const auto& c = j.at("counts");
            r.counts = {c.at("N_ca").get<std::size_t>(), c.at("N_c").get<std::size_t>(),
                        c.at("N_a").get<std::size_t>(), c.at("N_total").get<std::size_t>()};
            rs.rules.push_back(std::move(r));
        }
        return rs;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("rules file '" + source.string() + "': " + e.what());
    }
}

}  // namespace xrl
