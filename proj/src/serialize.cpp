#include "xrl/serialize.hpp"

#include <fstream>

#include "xrl/textualizer.hpp"

namespace xrl {

void to_json(Json& j, const PredicateSchema& schema) {
    j = Json::object();
    j["n_cat"] = schema.n_cat;
    j["source"] = schema.source;
    Json features = Json::array();
    for (const auto& fp : schema.features) {
        Json f;
        f["name"] = fp.name;
        f["thresholds"] = fp.thresholds;
        f["labels"] = fp.labels;
        f["degenerate"] = fp.degenerate;
        features.push_back(std::move(f));
    }
    j["features"] = std::move(features);
}

void from_json(const Json& j, PredicateSchema& schema) {
    schema.n_cat = j.at("n_cat").get<int>();
    schema.source = j.value("source", std::string{});
    schema.features.clear();
    for (const auto& f : j.at("features")) {
        FeaturePredicate fp;
        fp.name = f.at("name").get<std::string>();
        fp.thresholds = f.at("thresholds").get<std::vector<double>>();
        fp.labels = f.contains("labels") ? f["labels"].get<std::vector<std::string>>()
                                         : level_labels(schema.n_cat);
        fp.degenerate = f.value("degenerate", false);
        schema.features.push_back(std::move(fp));
    }
}

Json assignments_to_json(const Condition& c, const PredicateSchema& schema) {
    Json out = Json::array();
    for (const auto& [f, mask] : c.assignments) {
        Json a;
        a["feature"] = schema.features.at(f).name;
        std::vector<int> levels;
        for (int l = 0; l < 32; ++l) {
            if (mask & level_bit(l)) levels.push_back(l);
        }
        a["levels"] = levels;
        out.push_back(std::move(a));
    }
    return out;
}

Condition assignments_from_json(const Json& j, const PredicateSchema& schema) {
    Condition c;
    for (const auto& a : j) {
        const auto name = a.at("feature").get<std::string>();
        std::size_t f = schema.size();
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (schema.features[i].name == name) f = i;
        }
        if (f == schema.size()) throw SchemaError("condition references unknown feature '" + name + "'");
        LevelMask mask = 0;
        for (int l : a.at("levels").get<std::vector<int>>()) {
            if (l < 0 || l >= schema.n_cat) {
                throw SchemaError("condition level " + std::to_string(l) + " out of range");
            }
            mask |= level_bit(l);
        }
        c.assignments[f] = mask;
    }
    c.check(schema);
    return c;
}

Json condition_to_json(const Condition& c, const PredicateSchema& schema) {
    Json out;
    out["assignments"] = assignments_to_json(c, schema);
    out["support"] = c.support;
    out["text"] = render_conditions({c}, schema);
    return out;
}

void write_json_file(const Json& doc, const std::filesystem::path& target) {
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    out << doc.dump(2) << '\n';
    if (!out) throw Error("cannot write '" + target.string() + "'");
}

Json read_json_file(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw Error("cannot open '" + source.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw SchemaError("'" + source.string() + "' is not valid JSON: " + e.what());
    }
}

}  // namespace xrl
