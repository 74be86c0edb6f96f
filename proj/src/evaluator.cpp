#include "xrl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "xrl/text_util.hpp"

namespace xrl {

PropertyMetrics eval_properties(const ConditionsPerAction& conds) {
    PropertyMetrics m;
    std::map<Condition, std::size_t> actions_of;
    for (const auto& list : conds) {
        const std::set<Condition> distinct(list.begin(), list.end());
        m.e_len += distinct.size();
        for (const auto& c : distinct) ++actions_of[c];
    }
    for (const auto& [c, n] : actions_of) {
        if (n >= 2) ++m.e_dup;
    }
    return m;
}

std::vector<Condition> duplicated_conditions(const ConditionsPerAction& conds) {
    std::map<Condition, std::size_t> actions_of;
    for (const auto& list : conds) {
        for (const auto& c : std::set<Condition>(list.begin(), list.end())) ++actions_of[c];
    }
    std::vector<Condition> out;
    for (const auto& [c, n] : actions_of) {
        if (n >= 2) out.push_back(c);
    }
    return out;
}

std::pair<double, double> macro_recall_f1(const std::vector<std::vector<std::size_t>>& confusion,
                                          std::span<const std::size_t> unpredicted) {
    const std::size_t n = confusion.size();
    double recall_sum = 0.0;
    double f1_sum = 0.0;
    std::size_t labels = 0;
    for (std::size_t a = 0; a < n; ++a) {
        std::size_t truth = a < unpredicted.size() ? unpredicted[a] : 0;
        std::size_t predicted = 0;
        for (std::size_t b = 0; b < n; ++b) {
            truth += confusion[a][b];
            predicted += confusion[b][a];
        }
        if (truth == 0 && predicted == 0) continue;
        ++labels;
        const double tp = static_cast<double>(confusion[a][a]);
        const double recall = truth ? tp / truth : 0.0;
        const double precision = predicted ? tp / predicted : 0.0;
        recall_sum += recall;
        f1_sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    }
    if (labels == 0) return {0.0, 0.0};
    return {recall_sum / labels, f1_sum / labels};
}

FidelityMetrics eval_fidelity_levels(const RuleSet& rules, const std::vector<Levels>& levels,
                                     std::span<const ActionId> actions) {
    if (levels.empty()) throw Error("eval_fidelity: replay set is empty");
    if (rules.empty()) throw Error("eval_fidelity: rule set has no rules");
    const std::size_t n_actions = rules.action_names.size();

    // Predictions depend on the discrete state only.
    std::map<Levels, std::vector<std::size_t>> by_state;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        auto& row = by_state[levels[i]];
        if (row.empty()) row.assign(n_actions, 0);
        row.at(static_cast<std::size_t>(actions[i])) += 1;
    }

    FidelityMetrics m;
    m.n_records = levels.size();
    m.confusion.assign(n_actions, std::vector<std::size_t>(n_actions, 0));
    std::vector<std::size_t> abstained(n_actions, 0);
    std::size_t unmatched = 0;
    std::size_t correct = 0;
    for (const auto& [state, counts] : by_state) {
        std::size_t total = 0;
        for (auto c : counts) total += c;
        const bool matched = std::any_of(rules.rules.begin(), rules.rules.end(),
                                         [&](const Rule& r) { return r.condition.matches(state); });
        if (!matched) unmatched += total;
        const Selection sel = select_action_levels(rules, state);
        if (!sel.action) {
            m.n_abstained += total;
            for (std::size_t a = 0; a < n_actions; ++a) abstained[a] += counts[a];
            continue;
        }
        const auto p = static_cast<std::size_t>(*sel.action);
        for (std::size_t a = 0; a < n_actions; ++a) m.confusion[a][p] += counts[a];
        correct += counts[p];
    }
    m.e_approx = static_cast<double>(unmatched) / static_cast<double>(m.n_records);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n_records);
    std::tie(m.recall, m.f1) = macro_recall_f1(m.confusion, abstained);
    return m;
}

FidelityMetrics eval_fidelity(const RuleSet& rules, const ReplaySet& rs) {
    if (rs.empty()) throw Error("eval_fidelity: replay set is empty");
    rules.schema.check_compatible(rs.schema);
    const auto levels = discretize_all(rs, rules.schema);
    std::vector<ActionId> actions;
    actions.reserve(rs.size());
    for (const auto& r : rs.records) actions.push_back(r.action);
    return eval_fidelity_levels(rules, levels, actions);
}

namespace {

void fill_means(PerformanceMetrics& m) {
    for (const auto& e : m.episodes) {
        m.mean_cr += e.cumulative_reward;
        m.mean_ts += static_cast<double>(e.steps);
        m.mean_ar += e.average_reward;
        if (e.success) ++m.successes;
    }
    const double n = static_cast<double>(m.episodes.size());
    m.mean_cr /= n;
    m.mean_ts /= n;
    m.mean_ar /= n;
}

}  // namespace

std::vector<std::uint64_t> default_eval_seeds() {
    std::vector<std::uint64_t> s(10);
    for (std::uint64_t i = 0; i < 10; ++i) s[i] = i;
    return s;
}

PerformanceMetrics eval_performance(const Policy& policy, Environment& env,
                                    std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw Error("eval_performance: no seeds");
    PerformanceMetrics m;
    for (const auto seed : seeds) {
        const Trajectory t = run_episode(env, policy, seed);
        EpisodeMetrics e;
        e.seed = seed;
        e.cumulative_reward = t.total_reward();
        e.steps = t.transitions.size();
        e.average_reward = e.cumulative_reward / static_cast<double>(e.steps);
        const auto& last = t.transitions.back();
        e.success = env.succeeded(last.done, last.truncated);
        m.episodes.push_back(e);
    }
    fill_means(m);
    return m;
}

PerformanceMetrics eval_performance(const RuleSet& rules, Environment& env,
                                    std::span<const std::uint64_t> seeds) {
    if (rules.empty()) throw Error("eval_performance: rule set has no rules");
    rules.schema.check_compatible(env.feature_schema());
    RuleSet deployed = rules;
    deployed.fallback = Fallback::Approximate;
    std::size_t approximated = 0;
    if (seeds.empty()) throw Error("eval_performance: no seeds");
    const Policy policy = [&](std::span<const double> s) {
        const Selection sel = select_action(deployed, s);
        if (sel.approximated) ++approximated;
        return *sel.action;
    };
    PerformanceMetrics m;
    for (const auto seed : seeds) {
        approximated = 0;
        const std::uint64_t one[] = {seed};
        auto single = eval_performance(policy, env, one);
        single.episodes.front().approximated_steps = approximated;
        m.episodes.push_back(single.episodes.front());
    }
    fill_means(m);
    return m;
}

double normalize_score(double x, double env_max) {
    if (env_max == 0.0 || !std::isfinite(env_max)) throw Error("normalize: maximum is zero");
    return x / std::abs(env_max) * 100.0;
}

std::vector<double> normalize_scores(std::span<const double> values) {
    double max_abs = 0.0;
    for (double v : values) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0.0) throw Error("normalize: maximum is zero");
    std::vector<double> out;
    for (double v : values) out.push_back(normalize_score(v, max_abs));
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string EvalReport::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

Json to_json(const EvalReport& r) {
    Json j;
    j["fingerprint"] = r.fingerprint();
    j["config"] = r.config;
    j["E_len"] = r.properties.e_len;
    j["E_dup"] = r.properties.e_dup;
    j["E_approx"] = r.fidelity.e_approx;
    j["E_acc"] = r.fidelity.accuracy;
    j["E_rec"] = r.fidelity.recall;
    j["E_F1"] = r.fidelity.f1;
    j["n_records"] = r.fidelity.n_records;
    j["confusion"] = r.fidelity.confusion;
    if (r.performance) {
        const auto& p = *r.performance;
        j["E_CR"] = p.mean_cr;
        j["E_TS"] = p.mean_ts;
        j["E_AR"] = p.mean_ar;
        j["successes"] = p.successes;
        Json eps = Json::array();
        for (const auto& e : p.episodes) {
            eps.push_back({{"seed", e.seed},
                           {"E_CR", e.cumulative_reward},
                           {"E_TS", e.steps},
                           {"E_AR", e.average_reward},
                           {"success", e.success},
                           {"approximated_steps", e.approximated_steps}});
        }
        j["episodes"] = std::move(eps);
    }
    return j;
}

void write_eval_report(const EvalReport& report, const std::filesystem::path& target) {
    write_json_file(to_json(report), target);
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace

std::string format_table(const std::vector<TableRow>& rows, std::string_view label_header) {
    std::size_t lw = label_header.size();
    for (const auto& r : rows) lw = std::max(lw, r.label.size());
    static const char* const heads[] = {"E_app", "E_len", "E_dup", "E_acc", "E_rec",
                                        "E_F1",  "E_CR",  "E_TS",  "E_AR"};
    constexpr std::size_t cw = 9;
    std::string out = pad_right(std::string(label_header), lw);
    for (const char* h : heads) out += pad_left(h, cw);
    out += '\n';
    out += std::string(lw + cw * 9, '-') + '\n';
    for (const auto& row : rows) {
        const EvalReport& r = *row.report;
        out += pad_right(row.label, lw);
        out += pad_left(fixed(r.fidelity.e_approx, 3), cw);
        out += pad_left(std::to_string(r.properties.e_len), cw);
        out += pad_left(std::to_string(r.properties.e_dup), cw);
        out += pad_left(fixed(r.fidelity.accuracy, 3), cw);
        out += pad_left(fixed(r.fidelity.recall, 3), cw);
        out += pad_left(fixed(r.fidelity.f1, 3), cw);
        if (r.performance) {
            out += pad_left(fixed(r.performance->mean_cr, 1), cw);
            out += pad_left(fixed(r.performance->mean_ts, 1), cw);
            out += pad_left(fixed(r.performance->mean_ar, 3), cw);
        } else {
            out += pad_left("-", cw) + pad_left("-", cw) + pad_left("-", cw);
        }
        out += '\n';
    }
    return out;
}

}  // namespace xrl
