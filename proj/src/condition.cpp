#include "xrl/condition.hpp"

#include "xrl/text_util.hpp"

namespace xrl {

Condition Condition::from_levels(const Levels& levels) {
    Condition c;
    for (std::size_t f = 0; f < levels.size(); ++f) c.assignments.emplace(f, level_bit(levels[f]));
    return c;
}

void Condition::check(const PredicateSchema& schema) const {
    const LevelMask allowed = full_mask(schema.n_cat);
    for (const auto& [f, mask] : assignments) {
        if (f >= schema.size()) {
            throw SchemaError("condition references feature " + std::to_string(f) +
                              " but the schema has " + std::to_string(schema.size()));
        }
        if (mask == 0) throw SchemaError("condition has an empty level set");
        if ((mask & ~allowed) != 0) {
            throw SchemaError("condition level out of range for n_cat = " +
                              std::to_string(schema.n_cat));
        }
    }
}

std::string describe(const Condition& c, const PredicateSchema& schema) {
    std::vector<std::string> parts;
    for (const auto& [f, mask] : c.assignments) {
        std::vector<std::string> levels;
        for (int l = 0; l < 32; ++l) {
            if (mask & level_bit(l)) levels.push_back(std::to_string(l));
        }
        const std::string name = f < schema.size() ? schema.features[f].name : std::to_string(f);
        parts.push_back(name + "=" +
                        (levels.size() == 1 ? levels[0] : "{" + join(levels, ",") + "}"));
    }
    return join(parts, " & ");
}

}  // namespace xrl
