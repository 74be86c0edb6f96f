#pragma once

// JSON mapping of the artifact types. Objects keep insertion order so the
// files diff cleanly and are byte-stable across runs.

#include <filesystem>

#include "json.hpp"
#include "xrl/condition.hpp"
#include "xrl/predicates.hpp"

namespace xrl {

using Json = nlohmann::ordered_json;

void to_json(Json& j, const PredicateSchema& schema);
void from_json(const Json& j, PredicateSchema& schema);

/// [{feature: <name>, levels: [..]}], levels ascending.
Json assignments_to_json(const Condition& c, const PredicateSchema& schema);
Condition assignments_from_json(const Json& j, const PredicateSchema& schema);

/// {assignments, support, text}
Json condition_to_json(const Condition& c, const PredicateSchema& schema);

/// Writes `doc` pretty-printed with a trailing newline.
void write_json_file(const Json& doc, const std::filesystem::path& target);
Json read_json_file(const std::filesystem::path& source);

}  // namespace xrl
