#include "xrl/ape.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace xrl {

namespace {

struct CubeHash {
    std::size_t operator()(const std::pair<std::uint32_t, std::uint32_t>& c) const noexcept {
        return (static_cast<std::size_t>(c.first) << 32) ^ c.second;
    }
};

using CubeSet = std::unordered_set<std::pair<std::uint32_t, std::uint32_t>, CubeHash>;

void check_terms(const std::vector<std::uint32_t>& terms, int nvars, const char* what) {
    const std::uint64_t limit = std::uint64_t{1} << nvars;
    for (auto t : terms) {
        if (t >= limit) {
            throw Error(std::string("qm: ") + what + " minterm " + std::to_string(t) +
                        " does not fit in " + std::to_string(nvars) + " variables");
        }
    }
}

bool pattern_less(const Implicant& a, const Implicant& b) { return a.pattern() < b.pattern(); }

}  // namespace

std::string Implicant::pattern() const {
    std::string s(nvars, '0');
    for (int v = 0; v < nvars; ++v) {
        const std::uint32_t bit = 1u << (nvars - 1 - v);
        s[v] = (mask & bit) ? '-' : ((value & bit) ? '1' : '0');
    }
    return s;
}

std::vector<std::uint32_t> Implicant::minterms() const {
    std::vector<std::uint32_t> out;
    // enumerate subsets of the dash mask
    std::uint32_t sub = 0;
    do {
        out.push_back(value | sub);
        sub = (sub - mask) & mask;
    } while (sub != 0);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Implicant> prime_implicants(const std::vector<std::uint32_t>& onset,
                                        const std::vector<std::uint32_t>& dcset, int nvars) {
    if (nvars < 1) throw Error("qm: need at least one variable");
    if (nvars > kMaxQmVariables) {
        throw ResourceError("qm: " + std::to_string(nvars) + " variables exceed the limit of " +
                            std::to_string(kMaxQmVariables) +
                            " (cost grows like 3^n / n)");
    }
    check_terms(onset, nvars, "onset");
    check_terms(dcset, nvars, "don't-care");
    const std::set<std::uint32_t> on(onset.begin(), onset.end());
    for (auto d : dcset) {
        if (on.count(d)) throw Error("qm: minterm " + std::to_string(d) + " is in both onset and dcset");
    }

    CubeSet current;
    for (auto t : onset) current.insert({t, 0u});
    for (auto t : dcset) current.insert({t, 0u});

    std::vector<Implicant> primes;
    while (!current.empty()) {
        CubeSet next;
        CubeSet merged;
        for (const auto& [value, mask] : current) {
            for (int b = 0; b < nvars; ++b) {
                const std::uint32_t bit = 1u << b;
                if ((mask & bit) || (value & bit)) continue;
                const std::pair<std::uint32_t, std::uint32_t> partner{value | bit, mask};
                if (!current.count(partner)) continue;
                next.insert({value, mask | bit});
                merged.insert({value, mask});
                merged.insert(partner);
            }
        }
        for (const auto& cube : current) {
            if (merged.count(cube)) continue;
            Implicant imp{cube.first, cube.second, nvars};
            // primes made only of don't-cares are useless for the cover
            bool useful = false;
            if (std::popcount(cube.second) < 10) {
                for (auto m : imp.minterms()) useful = useful || on.count(m);
            } else {
                for (auto m : on) useful = useful || imp.covers(m);
            }
            if (useful) primes.push_back(imp);
        }
        current = std::move(next);
    }
    std::vector<std::pair<std::string, Implicant>> keyed;
    keyed.reserve(primes.size());
    for (const auto& p : primes) keyed.emplace_back(p.pattern(), p);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < keyed.size(); ++i) primes[i] = keyed[i].second;
    return primes;
}

std::vector<Implicant> qm_minimize(const std::vector<std::uint32_t>& onset,
                                   const std::vector<std::uint32_t>& dcset, int nvars) {
    std::vector<Implicant> primes = prime_implicants(onset, dcset, nvars);
    std::vector<char> is_on(std::size_t{1} << nvars, 0);
    for (auto m : onset) is_on[m] = 1;
    std::vector<std::uint32_t> on_terms(onset.begin(), onset.end());
    std::sort(on_terms.begin(), on_terms.end());
    on_terms.erase(std::unique(on_terms.begin(), on_terms.end()), on_terms.end());
    if (on_terms.empty()) return {};

    // onset minterms of each prime, and primes of each onset minterm
    std::vector<std::vector<std::uint32_t>> covers(primes.size());
    std::unordered_map<std::uint32_t, std::vector<std::size_t>> covered_by;
    for (std::size_t p = 0; p < primes.size(); ++p) {
        for (auto m : primes[p].minterms()) {
            if (!is_on[m]) continue;
            covers[p].push_back(m);
            covered_by[m].push_back(p);
        }
    }

    std::vector<std::size_t> hits(primes.size());
    for (std::size_t p = 0; p < primes.size(); ++p) hits[p] = covers[p].size();
    std::vector<char> done(is_on.size(), 0);
    std::size_t remaining = on_terms.size();
    std::vector<Implicant> cover;
    std::vector<bool> taken(primes.size(), false);
    auto take = [&](std::size_t p) {
        taken[p] = true;
        cover.push_back(primes[p]);
        for (auto m : covers[p]) {
            if (done[m]) continue;
            done[m] = 1;
            --remaining;
            for (auto q : covered_by[m]) --hits[q];
        }
    };

    // essential primes: sole cover of some onset minterm
    for (auto m : on_terms) {
        const auto& by = covered_by[m];
        if (by.size() == 1 && !taken[by.front()]) take(by.front());
    }

    while (remaining > 0) {
        std::size_t best = primes.size();
        std::size_t best_hits = 0;
        for (std::size_t p = 0; p < primes.size(); ++p) {
            // primes are in pattern order, so strict > keeps the first on ties
            if (!taken[p] && hits[p] > best_hits) {
                best_hits = hits[p];
                best = p;
            }
        }
        if (best == primes.size()) throw Error("qm: onset minterm left uncovered");
        take(best);
    }
    std::sort(cover.begin(), cover.end(), pattern_less);
    return cover;
}

std::uint32_t minterm_of(const Levels& levels) {
    std::uint32_t id = 0;
    for (int l : levels) {
        if (l != 0 && l != 1) throw Error("minterm_of: levels must be binary");
        id = (id << 1) | static_cast<std::uint32_t>(l);
    }
    return id;
}

ApeResult ape_explain(const ReplaySet& rs, ActionId action, const PredicateSchema& schema) {
    if (schema.n_cat != 2) {
        throw SchemaError("APE supports binary predicates only (n_cat = 2), got n_cat = " +
                          std::to_string(schema.n_cat));
    }
    schema.check_compatible(rs.schema);
    const int nvars = static_cast<int>(schema.size());
    if (nvars > kMaxQmVariables) {
        throw ResourceError("APE: " + std::to_string(nvars) + " predicates exceed the limit of " +
                            std::to_string(kMaxQmVariables));
    }

    std::set<std::uint32_t> observed;
    std::set<std::uint32_t> onset;
    for (const auto& rec : rs.records) {
        const std::uint32_t m = minterm_of(discretize(rec.state, schema));
        observed.insert(m);
        if (rec.action == action) onset.insert(m);
    }
    ApeResult result;
    if (onset.empty()) return result;

    std::vector<std::uint32_t> dcset;
    const std::uint32_t space = 1u << nvars;
    for (std::uint32_t m = 0; m < space; ++m) {
        if (!observed.count(m)) dcset.push_back(m);
    }
    const auto cover =
        qm_minimize(std::vector<std::uint32_t>(onset.begin(), onset.end()), dcset, nvars);
    if (cover.size() == 1 && cover.front().is_tautology()) {
        result.no_explanation = true;
        return result;
    }
    for (const auto& imp : cover) {
        Condition c;
        for (int v = 0; v < nvars; ++v) {
            const std::uint32_t bit = 1u << (nvars - 1 - v);
            if (imp.mask & bit) continue;
            c.assignments.emplace(static_cast<std::size_t>(v), level_bit((imp.value & bit) ? 1 : 0));
        }
        for (const auto& rec : rs.records) {
            if (rec.action == action && c.matches(discretize(rec.state, schema))) ++c.support;
        }
        result.conditions.push_back(std::move(c));
    }
    return result;
}

}  // namespace xrl
