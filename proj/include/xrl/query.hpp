#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xrl/predicates.hpp"
#include "xrl/replay.hpp"

namespace xrl {

// ---------------------------------------------------------------------------
// Structured question grammar
//
//   when action = <name>
//   when will you do <name>
//   what if <clause> [and <clause>]...
//   clause := <feature> <cmp> <number> | <feature> is <Level>
//   cmp    := < | <= | > | >= | =
//
// Keywords are case-insensitive and a trailing '?' is ignored.
// ---------------------------------------------------------------------------

enum class Comparator { Less, LessEqual, Greater, GreaterEqual, Equal, IsLevel };

struct FeatureClause {
    std::size_t feature = 0;
    Comparator cmp = Comparator::Equal;
    /// Numeric operand; unused for IsLevel.
    double value = 0.0;
    /// Level index for IsLevel.
    int level = -1;

    bool operator==(const FeatureClause&) const = default;
};

struct QueryAst {
    enum class Kind { WhenAction, WhatOnCondition };
    Kind kind = Kind::WhenAction;
    std::optional<ActionId> action;
    std::vector<FeatureClause> clauses;

    bool operator==(const QueryAst&) const = default;
};

/// Names the parser resolves against. `predicates` may be null, in which
/// case level clauses are rejected.
struct QueryContext {
    const FeatureSchema* features = nullptr;
    const std::vector<std::string>* action_names = nullptr;
    const PredicateSchema* predicates = nullptr;

    static QueryContext of(const ReplaySet& rs, const PredicateSchema* predicates = nullptr) {
        return {&rs.schema, &rs.action_names, predicates};
    }
};

QueryAst parse_query(std::string_view text, const QueryContext& ctx);

/// `SELECT * FROM replay WHERE ...` with clauses in AST order. Level clauses
/// expand to the band of thresholds that discretize() assigns to the level.
std::string to_sql(const QueryAst& ast, const QueryContext& ctx);

// ---------------------------------------------------------------------------
// SQL whitelist
// ---------------------------------------------------------------------------

/// A statement accepted by validate_sql, re-rendered in canonical form.
class ValidatedQuery {
public:
    const std::string& sql() const noexcept { return sql_; }
    /// Canonical WHERE expression, empty when the statement has none.
    const std::string& where_clause() const noexcept { return where_; }

private:
    friend ValidatedQuery validate_sql(std::string_view, const FeatureSchema&);
    std::string sql_;
    std::string where_;
};

/// Accepts exactly one SELECT over table `replay` whose WHERE clause uses
/// known columns, numeric literals, comparisons, BETWEEN, AND/OR/NOT and
/// parentheses. Feature columns may be written as `f_<name>` or `<name>`.
/// Anything else raises ValidationError with the reason.
ValidatedQuery validate_sql(std::string_view stmt, const FeatureSchema& schema);

// ---------------------------------------------------------------------------
// Optional LLM text-to-SQL client
// ---------------------------------------------------------------------------

struct LlmConfig {
    /// e.g. http://localhost:8000/v1 ; requests go to <base_url>/chat/completions
    std::string base_url;
    std::string model;
    double temperature = 0.5;
    /// Name of the environment variable holding a bearer token, if any.
    std::string api_key_env;
    int timeout_seconds = 60;
};

struct LlmTranslation {
    /// SQL extracted from the model reply.
    std::string candidate;
    std::optional<ValidatedQuery> validated;
    std::string rejection;
    /// Structured-grammar result, filled when the candidate was rejected.
    std::optional<std::string> structured_sql;
    std::string structured_error;
};

/// Chat messages sent to the endpoint: a system message describing the table
/// and few-shot question/SQL pairs, then the user question.
std::vector<std::pair<std::string, std::string>> build_llm_messages(
    std::string_view question, const QueryContext& ctx);

/// Pulls the SQL out of a model reply (drops <think> blocks and code fences).
std::string extract_sql(std::string_view reply);

/// One blocking chat-completion request. Network failures and malformed
/// responses raise UnavailableError; a reply that fails validation falls
/// back to parse_query and both outcomes are returned.
LlmTranslation llm_translate(std::string_view question, const LlmConfig& config,
                             const QueryContext& ctx);

}  // namespace xrl
