#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xrl/errors.hpp"

namespace xrl {

using ActionId = int;

struct FeatureBounds {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const FeatureBounds&) const = default;
};

struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<std::string> units;
    std::vector<std::optional<FeatureBounds>> bounds;

    std::size_t size() const noexcept { return names.size(); }
    /// Index of `name`, or nullopt.
    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws SchemaError when names are empty/duplicated or bounds are inverted.
    void validate() const;

    bool operator==(const FeatureSchema&) const = default;
};

struct ReplayRecord {
    std::int64_t episode = 0;
    std::int64_t step = 0;
    std::vector<double> state;
    ActionId action = 0;
    double reward = 0.0;
    bool done = false;
    /// Set for time-limit endings; such records also carry done = true.
    bool truncated = false;

    bool operator==(const ReplayRecord&) const = default;
};

struct ReplaySet {
    FeatureSchema schema;
    std::vector<ReplayRecord> records;
    std::vector<std::string> action_names;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    std::size_t n_actions() const noexcept { return action_names.size(); }

    /// Index of an action display name, or nullopt.
    std::optional<ActionId> find_action(std::string_view name) const;

    /// Checks the record-level invariants: state widths, action range,
    /// (episode, step) ordering and uniqueness.
    void validate() const;

    /// Restores (episode, step) order.
    void sort();

    bool operator==(const ReplaySet&) const = default;
};

enum class ReplayFormat { Db, Csv, Jsonl };

ReplayFormat parse_replay_format(std::string_view tag);
/// Infers the format from the file extension (.db/.sqlite, .csv, .jsonl).
ReplayFormat format_from_extension(const std::filesystem::path& path);

/// Column name used for a feature in every tabular format.
std::string feature_column(std::string_view feature);

/// Loads a replay file. When `sidecar` names an existing schema.json, units,
/// bounds and action names are taken from it; otherwise actions are named
/// a0..aN for the largest observed id.
ReplaySet ingest(const std::filesystem::path& source, ReplayFormat format,
                 const std::optional<std::filesystem::path>& sidecar = std::nullopt);

/// Writes `rs` in the given format, replacing any existing file.
void write_replay(const ReplaySet& rs, const std::filesystem::path& target,
                  ReplayFormat format);

/// schema.json: {features:[{name,unit,min,max}], actions:[names]}
void write_sidecar(const ReplaySet& rs, const std::filesystem::path& target);
std::pair<FeatureSchema, std::vector<std::string>> read_sidecar(
    const std::filesystem::path& source);

/// Default sidecar location for a replay file: `schema.json` beside it.
std::filesystem::path default_sidecar_path(const std::filesystem::path& replay);

class ValidatedQuery;

/// Runs a validated SELECT over an in-memory copy of `rs` and returns the
/// matching records in their original order. The schema is unchanged.
ReplaySet filter(const ReplaySet& rs, const ValidatedQuery& query);

/// Records with the given action.
ReplaySet filter_action(const ReplaySet& rs, ActionId action);

}  // namespace xrl
