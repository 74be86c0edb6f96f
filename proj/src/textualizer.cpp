#include "xrl/textualizer.hpp"

#include <bit>

#include "xrl/text_util.hpp"

namespace xrl {

namespace {

bool contiguous(LevelMask mask) {
    if (mask == 0) return false;
    const LevelMask shifted = mask >> std::countr_zero(mask);
    return (shifted & (shifted + 1)) == 0;
}

int lowest(LevelMask mask) { return std::countr_zero(mask); }
int highest(LevelMask mask) { return 31 - std::countl_zero(mask); }

const std::string& label_of(const PredicateSchema& schema, std::size_t f, int level) {
    const auto& labels = schema.features.at(f).labels;
    if (level < 0 || static_cast<std::size_t>(level) >= labels.size()) {
        throw Error("render: level " + std::to_string(level) + " out of range for feature '" +
                    schema.features.at(f).name + "'");
    }
    return labels[level];
}

std::string_view strip_parens(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = trim(s.substr(1, s.size() - 2));
    return s;
}

// Splits on an exact separator.
std::vector<std::string_view> split_on(std::string_view s, std::string_view sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + sep.size();
    }
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

int resolve_label(const PredicateSchema& schema, std::size_t f, std::string_view text) {
    const int level = schema.find_label(f, trim(text));
    if (level < 0) {
        throw ParseError("unknown level '" + std::string(trim(text)) + "' for feature '" +
                             schema.features[f].name + "'",
                         0);
    }
    return level;
}

LevelMask range_mask(int lo, int hi) {
    LevelMask m = 0;
    for (int l = lo; l <= hi; ++l) m |= level_bit(l);
    return m;
}

}  // namespace

std::string render_clause(std::size_t feature, LevelMask mask, const PredicateSchema& schema) {
    const int n = schema.n_cat;
    if (mask == 0 || (mask & ~full_mask(n)) != 0) {
        throw Error("render: invalid level set for feature '" + schema.features.at(feature).name +
                    "'");
    }
    const std::string& name = schema.features.at(feature).name;
    const int lo = lowest(mask);
    const int hi = highest(mask);
    if (lo == hi) return name + " is " + to_lower(label_of(schema, feature, lo));
    if (!contiguous(mask)) {
        std::vector<std::string> parts;
        for (int l = lo; l <= hi; ++l) {
            if (mask & level_bit(l)) parts.push_back(to_lower(label_of(schema, feature, l)));
        }
        return name + " is " + join(parts, " or ");
    }
    if (lo == 0 && hi == n - 1) return name + " is any level";
    if (hi == n - 1) return name + " is above " + label_of(schema, feature, lo - 1);
    if (lo == 0) return name + " is below " + label_of(schema, feature, hi + 1);
    return name + " is between " + label_of(schema, feature, lo) + " and " +
           label_of(schema, feature, hi);
}

std::string render_conditions(const std::vector<Condition>& conds, const PredicateSchema& schema) {
    if (conds.empty()) return std::string(kNoConditionSentence);
    std::vector<std::string> rendered;
    for (const auto& c : conds) {
        if (c.empty()) {
            rendered.emplace_back(kAnyState);
            continue;
        }
        std::vector<std::string> clauses;
        for (const auto& [f, mask] : c.assignments) clauses.push_back(render_clause(f, mask, schema));
        rendered.push_back(join(clauses, " AND "));
    }
    if (rendered.size() == 1) return rendered.front();
    for (auto& r : rendered) r = "(" + r + ")";
    return join(rendered, " OR ");
}

std::string render_explanation(const std::vector<Condition>& conds, const PredicateSchema& schema,
                               std::string_view action_name) {
    if (conds.empty()) return std::string(kNoConditionSentence);
    if (conds.size() == 1 && conds.front().empty()) {
        return "I take " + std::string(action_name) + " in " + std::string(kAnyState);
    }
    return "I take " + std::string(action_name) + " when " + render_conditions(conds, schema);
}

std::vector<Condition> parse_conditions(std::string_view text, const PredicateSchema& schema) {
    text = trim(text);
    if (text == kNoConditionSentence) return {};
    if (starts_with_ci(text, "I take ")) {
        if (text.ends_with(std::string(" in ") + std::string(kAnyState))) return {Condition{}};
        const std::size_t when = text.find(" when ");
        if (when == std::string_view::npos) throw ParseError("explanation lacks ' when '", 0);
        text = trim(text.substr(when + 6));
    }
    std::vector<Condition> out;
    for (auto part : split_on(text, " OR ")) {
        Condition c;
        if (iequals(strip_parens(part), kAnyState)) {
            out.push_back(std::move(c));
            continue;
        }
        for (auto clause : split_on(strip_parens(part), " AND ")) {
            clause = trim(clause);
            const std::size_t is = clause.find(" is ");
            if (is == std::string_view::npos) {
                throw ParseError("clause '" + std::string(clause) + "' lacks ' is '", 0);
            }
            const std::string name(trim(clause.substr(0, is)));
            std::size_t f = schema.size();
            for (std::size_t i = 0; i < schema.size(); ++i) {
                if (schema.features[i].name == name) f = i;
            }
            if (f == schema.size()) throw ParseError("unknown feature '" + name + "'", 0);
            const std::string_view rest = trim(clause.substr(is + 4));
            const int n = schema.n_cat;
            LevelMask mask = 0;
            if (iequals(rest, "any level")) {
                mask = full_mask(n);
            } else if (starts_with_ci(rest, "above ")) {
                mask = range_mask(resolve_label(schema, f, rest.substr(6)) + 1, n - 1);
            } else if (starts_with_ci(rest, "below ")) {
                mask = range_mask(0, resolve_label(schema, f, rest.substr(6)) - 1);
            } else if (starts_with_ci(rest, "between ")) {
                const auto bounds = split_on(rest.substr(8), " and ");
                if (bounds.size() != 2) throw ParseError("malformed 'between' clause", 0);
                mask = range_mask(resolve_label(schema, f, bounds[0]),
                                  resolve_label(schema, f, bounds[1]));
            } else {
                for (auto label : split_on(rest, " or ")) {
                    mask |= level_bit(resolve_label(schema, f, label));
                }
            }
            if (mask == 0) throw ParseError("clause '" + std::string(clause) + "' is empty", 0);
            c.assignments[f] = mask;
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Condition> compress_levels(std::vector<Condition> conds) {
    for (const auto& c : conds) {
        if (c.empty()) return {Condition{}};
    }
    auto mergeable = [](const Condition& a, const Condition& b, std::size_t& feature) {
        if (a.assignments.size() != b.assignments.size()) return false;
        int differing = 0;
        auto ia = a.assignments.begin();
        auto ib = b.assignments.begin();
        for (; ia != a.assignments.end(); ++ia, ++ib) {
            if (ia->first != ib->first) return false;
            if (ia->second != ib->second) {
                ++differing;
                feature = ia->first;
            }
        }
        return differing == 1 &&
               contiguous(a.assignments.at(feature) | b.assignments.at(feature));
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < conds.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < conds.size() && !changed; ++j) {
                std::size_t f = 0;
                if (!mergeable(conds[i], conds[j], f)) continue;
                conds[i].assignments[f] |= conds[j].assignments.at(f);
                conds[i].support += conds[j].support;
                conds.erase(conds.begin() + static_cast<std::ptrdiff_t>(j));
                changed = true;
            }
        }
    }
    return conds;
}

}  // namespace xrl
