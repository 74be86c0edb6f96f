#include "xrl/replay.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "xrl/query.hpp"
#include "xrl/text_util.hpp"

namespace xrl {

namespace {

using nlohmann::json;

constexpr const char* kFeaturePrefix = "f_";

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto tail = [&](char c) { return head(c) || std::isdigit(static_cast<unsigned char>(c)); };
    if (!head(s.front())) return false;
    return std::all_of(s.begin() + 1, s.end(), tail);
}

// RAII handles for the sqlite C API.
struct DbCloser {
    void operator()(sqlite3* db) const { sqlite3_close(db); }
};
struct StmtFinalizer {
    void operator()(sqlite3_stmt* st) const { sqlite3_finalize(st); }
};
using DbHandle = std::unique_ptr<sqlite3, DbCloser>;
using StmtHandle = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

DbHandle open_db(const std::string& path, int flags) {
    sqlite3* raw = nullptr;
    const int rc = sqlite3_open_v2(path.c_str(), &raw, flags, nullptr);
    DbHandle db(raw);
    if (rc != SQLITE_OK) {
        throw Error("sqlite: cannot open '" + path + "': " +
                    (raw ? sqlite3_errmsg(raw) : "out of memory"));
    }
    return db;
}

void exec(sqlite3* db, const std::string& sql) {
    char* msg = nullptr;
    if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &msg) != SQLITE_OK) {
        std::string err = msg ? msg : "unknown error";
        sqlite3_free(msg);
        throw Error("sqlite: " + err + " in: " + sql);
    }
}

StmtHandle prepare(sqlite3* db, const std::string& sql) {
    sqlite3_stmt* raw = nullptr;
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
        throw Error(std::string("sqlite: ") + sqlite3_errmsg(db) + " in: " + sql);
    }
    return StmtHandle(raw);
}

std::string quote_ident(std::string_view name) { return "\"" + std::string(name) + "\""; }

std::string create_table_sql(const FeatureSchema& schema, bool with_row_index) {
    std::string sql = "CREATE TABLE replay (episode INTEGER, step INTEGER";
    for (const auto& n : schema.names) sql += ", " + quote_ident(feature_column(n)) + " REAL";
    sql += ", action INTEGER, reward REAL, done INTEGER, truncated INTEGER";
    if (with_row_index) sql += ", _row INTEGER";
    sql += ")";
    return sql;
}

void insert_records(sqlite3* db, const ReplaySet& rs, bool with_row_index) {
    std::string sql = "INSERT INTO replay VALUES (?,?";
    for (std::size_t i = 0; i < rs.schema.size(); ++i) sql += ",?";
    sql += ",?,?,?,?";
    if (with_row_index) sql += ",?";
    sql += ")";
    exec(db, "BEGIN");
    StmtHandle st = prepare(db, sql);
    for (std::size_t r = 0; r < rs.records.size(); ++r) {
        const auto& rec = rs.records[r];
        int col = 1;
        sqlite3_bind_int64(st.get(), col++, rec.episode);
        sqlite3_bind_int64(st.get(), col++, rec.step);
        for (double v : rec.state) sqlite3_bind_double(st.get(), col++, v);
        sqlite3_bind_int(st.get(), col++, rec.action);
        sqlite3_bind_double(st.get(), col++, rec.reward);
        sqlite3_bind_int(st.get(), col++, rec.done ? 1 : 0);
        sqlite3_bind_int(st.get(), col++, rec.truncated ? 1 : 0);
        if (with_row_index) sqlite3_bind_int64(st.get(), col++, static_cast<sqlite3_int64>(r));
        if (sqlite3_step(st.get()) != SQLITE_DONE) {
            throw Error(std::string("sqlite insert failed: ") + sqlite3_errmsg(db));
        }
        sqlite3_reset(st.get());
    }
    exec(db, "COMMIT");
}

// Column layout shared by the three readers.
struct ColumnMap {
    std::ptrdiff_t episode = -1, step = -1, action = -1, reward = -1, done = -1, truncated = -1;
    std::vector<std::size_t> features;
    std::vector<std::string> feature_names;
};

ColumnMap map_columns(const std::vector<std::string>& header) {
    ColumnMap m;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& h = header[i];
        const auto idx = static_cast<std::ptrdiff_t>(i);
        if (h == "episode") m.episode = idx;
        else if (h == "step") m.step = idx;
        else if (h == "action") m.action = idx;
        else if (h == "reward") m.reward = idx;
        else if (h == "done") m.done = idx;
        else if (h == "truncated") m.truncated = idx;
        else if (h.rfind(kFeaturePrefix, 0) == 0 && h.size() > 2) {
            m.features.push_back(i);
            m.feature_names.push_back(h.substr(2));
        }
    }
    const std::pair<const char*, std::ptrdiff_t> required[] = {
        {"episode", m.episode}, {"step", m.step},   {"action", m.action},
        {"reward", m.reward},   {"done", m.done}};
    for (const auto& [name, idx] : required) {
        if (idx < 0) throw SchemaError(std::string("replay: missing column '") + name + "'");
    }
    if (m.features.empty()) {
        throw SchemaError("replay: missing feature columns (expected at least one f_<name>)");
    }
    return m;
}

double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
    cell = trim(cell);
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        throw ParseError("replay: row " + std::to_string(row) + ": column '" +
                             std::string(column) + "' is not numeric: '" + std::string(cell) + "'",
                         row);
    }
    return v;
}

std::int64_t parse_integer(std::string_view cell, std::size_t row, std::string_view column) {
    const double v = parse_number(cell, row, column);
    if (v != static_cast<double>(static_cast<std::int64_t>(v)) || v < 0) {
        throw ParseError("replay: row " + std::to_string(row) + ": column '" +
                             std::string(column) + "' must be a non-negative integer",
                         row);
    }
    return static_cast<std::int64_t>(v);
}

bool parse_flag(std::string_view cell, std::size_t row, std::string_view column) {
    cell = trim(cell);
    if (iequals(cell, "true")) return true;
    if (iequals(cell, "false")) return false;
    return parse_integer(cell, row, column) != 0;
}

// Turns raw cells into records; shared by csv and jsonl.
ReplaySet assemble(const ColumnMap& m, const std::vector<std::vector<std::string>>& rows) {
    ReplaySet rs;
    rs.schema.names = m.feature_names;
    rs.records.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        ReplayRecord rec;
        rec.episode = parse_integer(row[m.episode], r, "episode");
        rec.step = parse_integer(row[m.step], r, "step");
        rec.action = static_cast<ActionId>(parse_integer(row[m.action], r, "action"));
        rec.reward = parse_number(row[m.reward], r, "reward");
        rec.done = parse_flag(row[m.done], r, "done");
        rec.truncated = m.truncated >= 0 && parse_flag(row[m.truncated], r, "truncated");
        rec.state.reserve(m.features.size());
        for (std::size_t k = 0; k < m.features.size(); ++k) {
            rec.state.push_back(
                parse_number(row[m.features[k]], r, feature_column(m.feature_names[k])));
        }
        rs.records.push_back(std::move(rec));
    }
    return rs;
}

ReplaySet read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("replay: cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("replay: '" + path.string() + "' has no header");
    std::vector<std::string> header;
    for (auto cell : split(trim(line), ',')) header.emplace_back(trim(cell));
    const ColumnMap m = map_columns(header);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> row;
        for (auto cell : split(trim(line), ',')) row.emplace_back(cell);
        if (row.size() != header.size()) {
            throw ParseError("replay: row " + std::to_string(rows.size()) + " has " +
                                 std::to_string(row.size()) + " cells, header has " +
                                 std::to_string(header.size()),
                             rows.size());
        }
        rows.push_back(std::move(row));
    }
    return assemble(m, rows);
}

std::string json_cell(const nlohmann::ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_null()) return "";
    return v.dump();
}

ReplaySet read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("replay: cannot open '" + path.string() + "'");
    std::vector<nlohmann::ordered_json> objects;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            objects.push_back(nlohmann::ordered_json::parse(line));
        } catch (const nlohmann::ordered_json::parse_error& e) {
            throw ParseError("replay: row " + std::to_string(objects.size()) +
                                 " is not valid JSON: " + e.what(),
                             objects.size());
        }
    }
    if (objects.empty()) {
        ReplaySet rs;
        return rs;
    }
    std::vector<std::string> header;
    for (const auto& [key, _] : objects.front().items()) header.push_back(key);
    const ColumnMap m = map_columns(header);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(objects.size());
    for (std::size_t r = 0; r < objects.size(); ++r) {
        std::vector<std::string> row;
        row.reserve(header.size());
        for (const auto& key : header) {
            if (!objects[r].contains(key)) {
                throw SchemaError("replay: row " + std::to_string(r) + " missing column '" + key +
                                  "'");
            }
            row.push_back(json_cell(objects[r][key]));
        }
        rows.push_back(std::move(row));
    }
    return assemble(m, rows);
}

ReplaySet read_db(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("replay: '" + path.string() + "' not found");
    DbHandle db = open_db(path.string(), SQLITE_OPEN_READONLY);
    {
        StmtHandle probe = prepare(
            db.get(), "SELECT count(*) FROM sqlite_master WHERE type='table' AND name='replay'");
        sqlite3_step(probe.get());
        if (sqlite3_column_int(probe.get(), 0) == 0) {
            throw SchemaError("replay: '" + path.string() + "' has no table 'replay'");
        }
    }
    StmtHandle st = prepare(db.get(), "SELECT * FROM replay");
    const int ncol = sqlite3_column_count(st.get());
    std::vector<std::string> header;
    for (int c = 0; c < ncol; ++c) header.emplace_back(sqlite3_column_name(st.get(), c));
    const ColumnMap m = map_columns(header);

    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<int>> types;
    int rc = 0;
    while ((rc = sqlite3_step(st.get())) == SQLITE_ROW) {
        std::vector<std::string> row(ncol);
        for (int c = 0; c < ncol; ++c) {
            const int type = sqlite3_column_type(st.get(), c);
            if (type == SQLITE_FLOAT) {
                row[c] = format_double(sqlite3_column_double(st.get(), c));
            } else if (type == SQLITE_INTEGER) {
                row[c] = std::to_string(sqlite3_column_int64(st.get(), c));
            } else if (type == SQLITE_NULL) {
                row[c] = "";
            } else {
                const auto* text = sqlite3_column_text(st.get(), c);
                row[c] = text ? reinterpret_cast<const char*>(text) : "";
            }
        }
        rows.push_back(std::move(row));
    }
    if (rc != SQLITE_DONE) throw Error(std::string("sqlite: ") + sqlite3_errmsg(db.get()));
    return assemble(m, rows);
}

}  // namespace

// ------------------------------------------------------------------- schema

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

void FeatureSchema::validate() const {
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (!is_identifier(n)) {
            throw SchemaError("feature name '" + n +
                              "' must be non-empty and contain only letters, digits and '_'");
        }
        if (!seen.insert(n).second) throw SchemaError("duplicate feature name '" + n + "'");
    }
    if (!units.empty() && units.size() != names.size()) {
        throw SchemaError("feature units do not match feature names");
    }
    if (!bounds.empty() && bounds.size() != names.size()) {
        throw SchemaError("feature bounds do not match feature names");
    }
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (bounds[i] && !(bounds[i]->min < bounds[i]->max)) {
            throw SchemaError("feature '" + names[i] + "': bounds require min < max");
        }
    }
}

std::optional<ActionId> ReplaySet::find_action(std::string_view name) const {
    for (std::size_t i = 0; i < action_names.size(); ++i) {
        if (action_names[i] == name) return static_cast<ActionId>(i);
    }
    return std::nullopt;
}

void ReplaySet::sort() {
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.episode, a.step) < std::tie(b.episode, b.step);
    });
}

void ReplaySet::validate() const {
    schema.validate();
    const std::size_t width = schema.size();
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.state.size() != width) {
            throw IntegrityError("record " + std::to_string(r) + ": state has " +
                                 std::to_string(rec.state.size()) + " values, schema has " +
                                 std::to_string(width));
        }
        if (rec.action < 0 || static_cast<std::size_t>(rec.action) >= action_names.size()) {
            throw IntegrityError("record " + std::to_string(r) + ": action " +
                                 std::to_string(rec.action) + " has no name");
        }
        if (r > 0) {
            const auto& prev = records[r - 1];
            if (std::tie(prev.episode, prev.step) == std::tie(rec.episode, rec.step)) {
                throw IntegrityError("duplicate (episode, step) = (" +
                                     std::to_string(rec.episode) + ", " +
                                     std::to_string(rec.step) + ")");
            }
            if (std::tie(prev.episode, prev.step) > std::tie(rec.episode, rec.step)) {
                throw IntegrityError("records not sorted by (episode, step) at " +
                                     std::to_string(r));
            }
        }
    }
}

ReplayFormat parse_replay_format(std::string_view tag) {
    if (iequals(tag, "db") || iequals(tag, "sqlite")) return ReplayFormat::Db;
    if (iequals(tag, "csv")) return ReplayFormat::Csv;
    if (iequals(tag, "jsonl")) return ReplayFormat::Jsonl;
    throw Error("unknown replay format '" + std::string(tag) + "' (expected db, csv or jsonl)");
}

ReplayFormat format_from_extension(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".csv") return ReplayFormat::Csv;
    if (ext == ".jsonl") return ReplayFormat::Jsonl;
    if (ext == ".db" || ext == ".sqlite" || ext == ".sqlite3") return ReplayFormat::Db;
    throw Error("cannot infer replay format of '" + path.string() + "' (use .db, .csv or .jsonl)");
}

std::string feature_column(std::string_view feature) {
    return kFeaturePrefix + std::string(feature);
}

std::filesystem::path default_sidecar_path(const std::filesystem::path& replay) {
    return replay.parent_path() / "schema.json";
}

// -------------------------------------------------------------------- ingest

ReplaySet ingest(const std::filesystem::path& source, ReplayFormat format,
                 const std::optional<std::filesystem::path>& sidecar) {
    if (!std::filesystem::exists(source)) {
        throw Error("replay: '" + source.string() + "' not found");
    }
    ReplaySet rs;
    switch (format) {
        case ReplayFormat::Db: rs = read_db(source); break;
        case ReplayFormat::Csv: rs = read_csv(source); break;
        case ReplayFormat::Jsonl: rs = read_jsonl(source); break;
    }
    rs.sort();

    ActionId max_action = -1;
    for (const auto& rec : rs.records) max_action = std::max(max_action, rec.action);

    if (sidecar && std::filesystem::exists(*sidecar)) {
        auto [features, actions] = read_sidecar(*sidecar);
        if (features.names != rs.schema.names) {
            throw SchemaError("sidecar '" + sidecar->string() +
                              "' lists features that differ from the replay columns");
        }
        rs.schema = std::move(features);
        rs.action_names = std::move(actions);
    } else {
        rs.schema.units.assign(rs.schema.names.size(), "");
        rs.schema.bounds.assign(rs.schema.names.size(), std::nullopt);
        for (ActionId a = 0; a <= max_action; ++a) rs.action_names.push_back("a" + std::to_string(a));
    }
    rs.validate();
    // Logged episodes are complete: steps run 0, 1, 2, ... within each episode.
    for (std::size_t r = 0; r < rs.records.size(); ++r) {
        const auto& rec = rs.records[r];
        const bool first = r == 0 || rs.records[r - 1].episode != rec.episode;
        const std::int64_t expected = first ? 0 : rs.records[r - 1].step + 1;
        if (rec.step != expected) {
            throw IntegrityError("episode " + std::to_string(rec.episode) + ": expected step " +
                                 std::to_string(expected) + ", found " + std::to_string(rec.step));
        }
    }
    return rs;
}

// --------------------------------------------------------------------- write

void write_replay(const ReplaySet& rs, const std::filesystem::path& target, ReplayFormat format) {
    rs.schema.validate();
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    switch (format) {
        case ReplayFormat::Db: {
            std::filesystem::remove(target);
            DbHandle db = open_db(target.string(), SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
            exec(db.get(), create_table_sql(rs.schema, false));
            insert_records(db.get(), rs, false);
            break;
        }
        case ReplayFormat::Csv: {
            std::ofstream out(target);
            out << "episode,step";
            for (const auto& n : rs.schema.names) out << ',' << feature_column(n);
            out << ",action,reward,done,truncated\n";
            for (const auto& rec : rs.records) {
                out << rec.episode << ',' << rec.step;
                for (double v : rec.state) out << ',' << format_double(v);
                out << ',' << rec.action << ',' << format_double(rec.reward) << ','
                    << (rec.done ? 1 : 0) << ',' << (rec.truncated ? 1 : 0) << '\n';
            }
            if (!out) throw Error("replay: failed writing '" + target.string() + "'");
            break;
        }
        case ReplayFormat::Jsonl: {
            std::ofstream out(target);
            for (const auto& rec : rs.records) {
                nlohmann::ordered_json row = nlohmann::ordered_json::object();
                row["episode"] = rec.episode;
                row["step"] = rec.step;
                for (std::size_t f = 0; f < rs.schema.size(); ++f) {
                    row[feature_column(rs.schema.names[f])] = rec.state[f];
                }
                row["action"] = rec.action;
                row["reward"] = rec.reward;
                row["done"] = rec.done ? 1 : 0;
                row["truncated"] = rec.truncated ? 1 : 0;
                out << row.dump() << '\n';
            }
            if (!out) throw Error("replay: failed writing '" + target.string() + "'");
            break;
        }
    }
}

void write_sidecar(const ReplaySet& rs, const std::filesystem::path& target) {
    json features = json::array();
    for (std::size_t f = 0; f < rs.schema.size(); ++f) {
        json entry;
        entry["name"] = rs.schema.names[f];
        entry["unit"] = f < rs.schema.units.size() ? rs.schema.units[f] : "";
        const auto bound = f < rs.schema.bounds.size() ? rs.schema.bounds[f] : std::nullopt;
        entry["min"] = bound ? json(bound->min) : json(nullptr);
        entry["max"] = bound ? json(bound->max) : json(nullptr);
        features.push_back(std::move(entry));
    }
    json doc;
    doc["features"] = std::move(features);
    doc["actions"] = rs.action_names;
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target);
    out << doc.dump(2) << '\n';
}

std::pair<FeatureSchema, std::vector<std::string>> read_sidecar(
    const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw Error("cannot open schema file '" + source.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("schema file '" + source.string() + "': " + e.what());
    }
    if (!doc.contains("features") || !doc.contains("actions")) {
        throw SchemaError("schema file '" + source.string() + "' needs 'features' and 'actions'");
    }
    FeatureSchema fs;
    for (const auto& f : doc["features"]) {
        fs.names.push_back(f.at("name").get<std::string>());
        fs.units.push_back(f.value("unit", std::string{}));
        const bool has_bounds = f.contains("min") && f.contains("max") && !f["min"].is_null() &&
                                !f["max"].is_null();
        fs.bounds.push_back(has_bounds ? std::optional<FeatureBounds>(FeatureBounds{
                                             f["min"].get<double>(), f["max"].get<double>()})
                                       : std::nullopt);
    }
    fs.validate();
    return {std::move(fs), doc["actions"].get<std::vector<std::string>>()};
}

// -------------------------------------------------------------------- filter

ReplaySet filter(const ReplaySet& rs, const ValidatedQuery& query) {
    ReplaySet out;
    out.schema = rs.schema;
    out.action_names = rs.action_names;
    if (rs.empty()) return out;

    DbHandle db = open_db(":memory:", SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
    exec(db.get(), create_table_sql(rs.schema, true));
    insert_records(db.get(), rs, true);

    std::string sql = "SELECT _row FROM replay";
    if (!query.where_clause().empty()) sql += " WHERE " + query.where_clause();
    sql += " ORDER BY _row";
    StmtHandle st = prepare(db.get(), sql);
    int rc = 0;
    while ((rc = sqlite3_step(st.get())) == SQLITE_ROW) {
        out.records.push_back(rs.records[static_cast<std::size_t>(sqlite3_column_int64(st.get(), 0))]);
    }
    if (rc != SQLITE_DONE) throw Error(std::string("sqlite: ") + sqlite3_errmsg(db.get()));
    return out;
}

ReplaySet filter_action(const ReplaySet& rs, ActionId action) {
    ReplaySet out;
    out.schema = rs.schema;
    out.action_names = rs.action_names;
    for (const auto& rec : rs.records) {
        if (rec.action == action) out.records.push_back(rec);
    }
    return out;
}

}  // namespace xrl
