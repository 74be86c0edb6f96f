#include "xrl/query.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "json.hpp"
#include "xrl/text_util.hpp"

#include "httplib.h"

namespace xrl {

namespace {

// ------------------------------------------------------------------ lexing

struct Token {
    enum class Kind { Word, Number, Symbol, End };
    Kind kind = Kind::End;
    std::string text;
    double number = 0.0;
    std::size_t pos = 0;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Length of a numeric literal at s[i] (digits, optional fraction and
// exponent, no sign), or 0.
std::size_t scan_number(std::string_view s, std::size_t i) {
    const std::size_t start = i;
    bool digits = false;
    while (i < s.size() && is_digit(s[i])) ++i, digits = true;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && is_digit(s[i])) ++i, digits = true;
    }
    if (!digits) return 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && is_digit(s[j])) {
            while (j < s.size() && is_digit(s[j])) ++j;
            i = j;
        }
    }
    if (i < s.size() && is_ident_char(s[i])) return 0;
    return i - start;
}

double to_number(std::string_view text, std::size_t pos) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ParseError("invalid number '" + std::string(text) + "' at position " +
                             std::to_string(pos),
                         pos);
    }
    return v;
}

// Question tokenizer: words, signed numbers, comparison operators.
std::vector<Token> lex_question(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < text.size() && (is_ident_char(text[j]) || text[j] == '-')) ++j;
            while (j > i && text[j - 1] == '-') --j;
            t.kind = Token::Kind::Word;
            t.text = std::string(text.substr(i, j - i));
            i = j;
        } else if ((c == '-' || c == '+') && scan_number(text, i + 1) > 0) {
            const std::size_t n = 1 + scan_number(text, i + 1);
            t.kind = Token::Kind::Number;
            t.text = std::string(text.substr(i, n));
            t.number = to_number(c == '+' ? text.substr(i + 1, n - 1) : text.substr(i, n), i);
            i += n;
        } else if (const std::size_t n = scan_number(text, i); n > 0) {
            t.kind = Token::Kind::Number;
            t.text = std::string(text.substr(i, n));
            t.number = to_number(t.text, i);
            i += n;
        } else if (c == '<' || c == '>' || c == '=' || c == '!') {
            std::size_t n = 1;
            if (i + 1 < text.size() && text[i + 1] == '=') n = 2;
            t.kind = Token::Kind::Symbol;
            t.text = std::string(text.substr(i, n));
            i += n;
        } else if (c == '?' && trim(text.substr(i + 1)).empty()) {
            break;
        } else {
            throw ParseError("unexpected character '" + std::string(1, c) + "' at position " +
                                 std::to_string(i),
                             i);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.pos = text.size();
    out.push_back(end);
    return out;
}

std::string names_list(const std::vector<std::string>& names) { return join(names, ", "); }

// ----------------------------------------------------------- question parser

class QuestionParser {
public:
    QuestionParser(std::string_view text, const QueryContext& ctx)
        : tokens_(lex_question(text)), ctx_(ctx) {}

    QueryAst parse() {
        QueryAst ast;
        if (accept_word("when")) {
            ast.kind = QueryAst::Kind::WhenAction;
            if (accept_word("action")) {
                if (!accept_symbol("=") && !accept_symbol("==") && !accept_word("is")) {
                    fail("expected '=' after 'action'");
                }
            } else {
                expect_word("will");
                expect_word("you");
                expect_word("do");
            }
            ast.action = action();
        } else if (accept_word("what")) {
            ast.kind = QueryAst::Kind::WhatOnCondition;
            if (!accept_word("if")) {
                expect_word("will");
                expect_word("you");
                expect_word("do");
                if (!accept_word("if") && !accept_word("when") && !accept_word("on")) {
                    fail("expected 'if', 'when' or 'on'");
                }
            }
            ast.clauses.push_back(clause());
            while (accept_word("and")) ast.clauses.push_back(clause());
        } else {
            fail("expected 'when action = <name>' or 'what if <condition>'");
        }
        if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
        return ast;
    }

private:
    const Token& peek() const { return tokens_[i_]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " at position " + std::to_string(peek().pos), peek().pos);
    }

    bool accept_word(std::string_view w) {
        if (peek().kind == Token::Kind::Word && iequals(peek().text, w)) {
            ++i_;
            return true;
        }
        return false;
    }

    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail("expected '" + std::string(w) + "'");
    }

    bool accept_symbol(std::string_view s) {
        if (peek().kind == Token::Kind::Symbol && peek().text == s) {
            ++i_;
            return true;
        }
        return false;
    }

    ActionId action() {
        const Token& t = peek();
        const auto& names = *ctx_.action_names;
        if (t.kind == Token::Kind::Word) {
            for (std::size_t a = 0; a < names.size(); ++a) {
                if (iequals(names[a], t.text)) {
                    ++i_;
                    return static_cast<ActionId>(a);
                }
            }
            throw ResolutionError("unknown action '" + t.text + "'; valid actions: " +
                                  names_list(names));
        }
        if (t.kind == Token::Kind::Number) {
            const double v = t.number;
            if (v == std::floor(v) && v >= 0 && v < static_cast<double>(names.size())) {
                ++i_;
                return static_cast<ActionId>(v);
            }
            throw ResolutionError("unknown action id '" + t.text + "'; valid actions: " +
                                  names_list(names));
        }
        fail("expected an action name");
    }

    std::size_t feature() {
        const Token& t = peek();
        if (t.kind != Token::Kind::Word) fail("expected a feature name");
        const auto& names = ctx_.features->names;
        for (std::size_t f = 0; f < names.size(); ++f) {
            if (iequals(names[f], t.text)) {
                ++i_;
                return f;
            }
        }
        throw ResolutionError("unknown feature '" + t.text + "'; valid features: " +
                              names_list(names));
    }

    FeatureClause clause() {
        FeatureClause c;
        c.feature = feature();
        if (accept_word("is")) {
            if (ctx_.predicates == nullptr) {
                throw ResolutionError("level clauses need a predicate schema");
            }
            std::string label;
            while (peek().kind != Token::Kind::End && !(peek().kind == Token::Kind::Word &&
                                                         iequals(peek().text, "and"))) {
                if (!label.empty()) label += ' ';
                label += peek().text;
                ++i_;
            }
            if (label.empty()) fail("expected a level name");
            const auto& preds = *ctx_.predicates;
            const auto& name = ctx_.features->names[c.feature];
            std::size_t pf = preds.size();
            for (std::size_t i = 0; i < preds.size(); ++i) {
                if (preds.features[i].name == name) pf = i;
            }
            if (pf == preds.size()) {
                throw ResolutionError("predicate schema has no feature '" + name + "'");
            }
            const int level = preds.find_label(pf, label);
            if (level < 0) {
                throw ResolutionError("unknown level '" + label + "' for feature '" + name +
                                      "'; valid levels: " +
                                      names_list(preds.features[pf].labels));
            }
            c.cmp = Comparator::IsLevel;
            c.level = level;
            return c;
        }
        if (accept_symbol("<")) {
            c.cmp = Comparator::Less;
        } else if (accept_symbol("<=")) {
            c.cmp = Comparator::LessEqual;
        } else if (accept_symbol(">")) {
            c.cmp = Comparator::Greater;
        } else if (accept_symbol(">=")) {
            c.cmp = Comparator::GreaterEqual;
        } else if (accept_symbol("=") || accept_symbol("==")) {
            c.cmp = Comparator::Equal;
        } else {
            fail("expected a comparison or 'is'");
        }
        if (peek().kind != Token::Kind::Number) fail("expected a number");
        c.value = peek().number;
        ++i_;
        return c;
    }

    std::vector<Token> tokens_;
    std::size_t i_ = 0;
    const QueryContext& ctx_;
};

void check_context(const QueryContext& ctx) {
    if (ctx.features == nullptr || ctx.action_names == nullptr) {
        throw Error("query context lacks a feature schema or action names");
    }
}

const char* const kReservedColumns[] = {"episode", "step", "action", "reward", "done", "truncated"};

bool is_reserved(std::string_view name) {
    for (const char* r : kReservedColumns) {
        if (iequals(name, r)) return true;
    }
    return false;
}

const char* const kSqlKeywords[] = {"select", "from", "where", "and", "or", "not", "between"};

bool is_keyword(std::string_view name) {
    for (const char* k : kSqlKeywords) {
        if (iequals(name, k)) return true;
    }
    return false;
}

// SQL literal that always reads as a real, e.g. 0 -> 0.0.
std::string sql_number(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

// Column reference used in generated SQL: the bare feature name unless it
// collides with a built-in column or keyword.
std::string sql_feature(std::string_view name) {
    if (is_reserved(name) || is_keyword(name)) return feature_column(name);
    return std::string(name);
}

// ----------------------------------------------------------- SQL validation

struct SqlToken {
    enum class Kind { Ident, Number, Symbol, End };
    Kind kind = Kind::End;
    std::string text;
    std::size_t pos = 0;
};

std::vector<SqlToken> lex_sql(std::string_view s) {
    std::vector<SqlToken> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        SqlToken t;
        t.pos = i;
        if (c == '\'' || c == '"' || c == '`' || c == '[') {
            throw ValidationError("quoted strings and identifiers are not allowed (position " +
                                  std::to_string(i) + ")");
        }
        if ((c == '-' && i + 1 < s.size() && s[i + 1] == '-') ||
            (c == '/' && i + 1 < s.size() && s[i + 1] == '*')) {
            throw ValidationError("comments are not allowed (position " + std::to_string(i) + ")");
        }
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < s.size() && is_ident_char(s[j])) ++j;
            t.kind = SqlToken::Kind::Ident;
            t.text = std::string(s.substr(i, j - i));
            i = j;
        } else if (const std::size_t n = scan_number(s, i); n > 0) {
            t.kind = SqlToken::Kind::Number;
            t.text = std::string(s.substr(i, n));
            i += n;
        } else {
            static constexpr std::string_view two[] = {"<=", ">=", "<>", "!=", "=="};
            std::size_t len = 0;
            for (auto op : two) {
                if (s.substr(i, 2) == op) len = 2;
            }
            if (len == 0 && std::string_view("=<>()*,;-+").find(c) != std::string_view::npos) len = 1;
            if (len == 0) {
                throw ValidationError("character '" + std::string(1, c) +
                                      "' is not allowed (position " + std::to_string(i) + ")");
            }
            t.kind = SqlToken::Kind::Symbol;
            t.text = std::string(s.substr(i, len));
            i += len;
        }
        out.push_back(std::move(t));
    }
    SqlToken end;
    end.pos = s.size();
    out.push_back(end);
    return out;
}

class SqlValidator {
public:
    SqlValidator(std::string_view stmt, const FeatureSchema& schema)
        : tokens_(lex_sql(stmt)), schema_(schema) {}

    std::pair<std::string, std::string> run() {
        expect_keyword("select");
        std::string cols;
        if (accept_symbol("*")) {
            cols = "*";
        } else {
            cols = column();
            while (accept_symbol(",")) cols += ", " + column();
        }
        expect_keyword("from");
        if (!(peek().kind == SqlToken::Kind::Ident && iequals(peek().text, "replay"))) {
            reject("unknown table '" + peek().text + "' (only 'replay' may be queried)");
        }
        ++i_;
        std::string where;
        if (accept_keyword("where")) where = or_expr();
        accept_symbol(";");
        if (peek().kind != SqlToken::Kind::End) {
            reject("unexpected '" + peek().text + "' after the statement (one SELECT only)");
        }
        std::string sql = "SELECT " + cols + " FROM replay";
        if (!where.empty()) sql += " WHERE " + where;
        return {sql, where};
    }

private:
    const SqlToken& peek() const { return tokens_[i_]; }

    [[noreturn]] void reject(const std::string& why) const { throw ValidationError(why); }

    bool accept_keyword(std::string_view k) {
        if (peek().kind == SqlToken::Kind::Ident && iequals(peek().text, k)) {
            ++i_;
            return true;
        }
        return false;
    }

    void expect_keyword(std::string_view k) {
        if (!accept_keyword(k)) {
            reject("expected " + to_upper(k) + " at position " + std::to_string(peek().pos) +
                   (peek().text.empty() ? "" : ", found '" + peek().text + "'"));
        }
    }

    bool accept_symbol(std::string_view s) {
        if (peek().kind == SqlToken::Kind::Symbol && peek().text == s) {
            ++i_;
            return true;
        }
        return false;
    }

    static std::string to_upper(std::string_view s) {
        std::string out(s);
        for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        return out;
    }

    std::string column() {
        const SqlToken& t = peek();
        if (t.kind != SqlToken::Kind::Ident) reject("expected a column at position " + std::to_string(t.pos));
        for (const char* r : kReservedColumns) {
            if (iequals(t.text, r)) {
                ++i_;
                return r;
            }
        }
        for (const auto& name : schema_.names) {
            if (iequals(t.text, feature_column(name)) || iequals(t.text, name)) {
                ++i_;
                return feature_column(name);
            }
        }
        reject("unknown column '" + t.text + "'");
    }

    std::string operand() {
        const SqlToken& t = peek();
        if (t.kind == SqlToken::Kind::Number) {
            ++i_;
            return t.text;
        }
        if (t.kind == SqlToken::Kind::Symbol && (t.text == "-" || t.text == "+")) {
            const std::string sign = t.text == "-" ? "-" : "";
            ++i_;
            if (peek().kind != SqlToken::Kind::Number) {
                reject("expected a number after '" + t.text + "'");
            }
            const std::string num = peek().text;
            ++i_;
            return sign + num;
        }
        return column();
    }

    std::string or_expr() {
        std::string out = and_expr();
        while (accept_keyword("or")) out += " OR " + and_expr();
        return out;
    }

    std::string and_expr() {
        std::string out = not_expr();
        while (accept_keyword("and")) out += " AND " + not_expr();
        return out;
    }

    std::string not_expr() {
        if (accept_keyword("not")) return "NOT " + not_expr();
        return primary();
    }

    std::string primary() {
        if (accept_symbol("(")) {
            std::string inner = or_expr();
            if (!accept_symbol(")")) reject("missing ')' at position " + std::to_string(peek().pos));
            return "(" + inner + ")";
        }
        const std::string lhs = operand();
        const bool negated = accept_keyword("not");
        if (accept_keyword("between")) {
            const std::string lo = operand();
            expect_keyword("and");
            const std::string hi = operand();
            return lhs + (negated ? " NOT BETWEEN " : " BETWEEN ") + lo + " AND " + hi;
        }
        if (negated) reject("expected BETWEEN after NOT");
        static constexpr std::string_view ops[] = {"=", "==", "!=", "<>", "<", "<=", ">", ">="};
        for (auto op : ops) {
            if (accept_symbol(op)) {
                const std::string canon = op == "==" ? "=" : op == "<>" ? "!=" : std::string(op);
                return lhs + " " + canon + " " + operand();
            }
        }
        reject("expected a comparison at position " + std::to_string(peek().pos) +
               (peek().text.empty() ? "" : ", found '" + peek().text + "'"));
    }

    std::vector<SqlToken> tokens_;
    std::size_t i_ = 0;
    const FeatureSchema& schema_;
};

}  // namespace

QueryAst parse_query(std::string_view text, const QueryContext& ctx) {
    check_context(ctx);
    return QuestionParser(text, ctx).parse();
}

std::string to_sql(const QueryAst& ast, const QueryContext& ctx) {
    check_context(ctx);
    std::vector<std::string> terms;
    if (ast.kind == QueryAst::Kind::WhenAction) {
        if (!ast.action) throw Error("to_sql: when-action query without an action");
        terms.push_back("action = " + std::to_string(*ast.action));
    }
    for (const auto& c : ast.clauses) {
        const std::string& name = ctx.features->names.at(c.feature);
        const std::string col = sql_feature(name);
        switch (c.cmp) {
            case Comparator::Less: terms.push_back(col + " < " + sql_number(c.value)); break;
            case Comparator::LessEqual: terms.push_back(col + " <= " + sql_number(c.value)); break;
            case Comparator::Greater: terms.push_back(col + " > " + sql_number(c.value)); break;
            case Comparator::GreaterEqual: terms.push_back(col + " >= " + sql_number(c.value)); break;
            case Comparator::Equal: terms.push_back(col + " = " + sql_number(c.value)); break;
            case Comparator::IsLevel: {
                if (ctx.predicates == nullptr) throw Error("to_sql: level clause without predicates");
                const FeaturePredicate* fp = nullptr;
                for (const auto& p : ctx.predicates->features) {
                    if (p.name == name) fp = &p;
                }
                if (fp == nullptr) throw Error("to_sql: no predicate for feature '" + name + "'");
                const auto& t = fp->thresholds;
                const int l = c.level;
                if (l < 0 || l > static_cast<int>(t.size())) {
                    throw Error("to_sql: level out of range for feature '" + name + "'");
                }
                if (l > 0) terms.push_back(col + " > " + sql_number(t[l - 1]));
                if (l < static_cast<int>(t.size())) terms.push_back(col + " <= " + sql_number(t[l]));
                break;
            }
        }
    }
    std::string sql = "SELECT * FROM replay";
    if (!terms.empty()) sql += " WHERE " + join(terms, " AND ");
    return sql;
}

ValidatedQuery validate_sql(std::string_view stmt, const FeatureSchema& schema) {
    auto [sql, where] = SqlValidator(stmt, schema).run();
    ValidatedQuery q;
    q.sql_ = std::move(sql);
    q.where_ = std::move(where);
    return q;
}

// ------------------------------------------------------------------- LLM

std::vector<std::pair<std::string, std::string>> build_llm_messages(std::string_view question,
                                                                    const QueryContext& ctx) {
    check_context(ctx);
    const auto& fs = *ctx.features;
    const auto& actions = *ctx.action_names;
    std::string sys =
        "You translate questions about an agent's replay data into one SQLite SELECT "
        "statement. Reply with the SQL only.\n"
        "Table replay(episode INTEGER, step INTEGER, ";
    for (std::size_t f = 0; f < fs.size(); ++f) {
        sys += feature_column(fs.names[f]) + " REAL";
        if (f < fs.units.size() && !fs.units[f].empty()) sys += " /* " + fs.units[f] + " */";
        sys += ", ";
    }
    sys += "action INTEGER, reward REAL, done INTEGER, truncated INTEGER).\nAction ids: ";
    for (std::size_t a = 0; a < actions.size(); ++a) {
        if (a) sys += ", ";
        sys += std::to_string(a) + " = " + actions[a];
    }
    sys +=
        ".\nUse numeric action ids, never strings. Only SELECT * FROM replay with a WHERE "
        "clause built from these columns, numbers, comparisons, BETWEEN, AND, OR, NOT.";

    std::vector<std::pair<std::string, std::string>> msgs;
    msgs.emplace_back("system", sys);
    const std::string f0 = fs.size() > 0 ? fs.names[0] : "x";
    const std::string f1 = fs.size() > 1 ? fs.names[1] : f0;
    const std::string a0 = actions.empty() ? "a0" : actions[0];
    const std::size_t last = actions.empty() ? 0 : actions.size() - 1;
    const std::string alast = actions.empty() ? "a0" : actions[last];
    msgs.emplace_back("user", "when will you do " + a0 + "?");
    msgs.emplace_back("assistant", "SELECT * FROM replay WHERE action = 0");
    msgs.emplace_back("user", "what will you do if " + f0 + " is greater than 0.1?");
    msgs.emplace_back("assistant", "SELECT * FROM replay WHERE " + feature_column(f0) + " > 0.1");
    msgs.emplace_back("user", "why did you choose " + alast + " while " + f1 + " was negative?");
    msgs.emplace_back("assistant", "SELECT * FROM replay WHERE action = " + std::to_string(last) +
                                       " AND " + feature_column(f1) + " < 0");
    msgs.emplace_back("user", "what happened in the first 10 steps of episode 3?");
    msgs.emplace_back("assistant", "SELECT * FROM replay WHERE episode = 3 AND step < 10");
    msgs.emplace_back("user", std::string(question));
    return msgs;
}

std::string extract_sql(std::string_view reply) {
    std::string text(reply);
    // Reasoning models wrap their deliberation in <think> blocks.
    while (true) {
        const auto open = text.find("<think>");
        if (open == std::string::npos) break;
        const auto close = text.find("</think>", open);
        text.erase(open, close == std::string::npos ? std::string::npos : close + 8 - open);
    }
    if (const auto fence = text.find("```"); fence != std::string::npos) {
        auto body = text.find('\n', fence);
        const auto end = body == std::string::npos ? std::string::npos : text.find("```", body);
        if (body != std::string::npos) {
            text = text.substr(body + 1, end == std::string::npos ? std::string::npos : end - body - 1);
        }
    }
    const std::string lower = to_lower(text);
    if (const auto sel = lower.find("select"); sel != std::string::npos) text = text.substr(sel);
    return std::string(trim(text));
}

namespace {

struct Endpoint {
    std::string origin;
    std::string path;
};

Endpoint split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw UnavailableError("LLM base_url '" + url + "' has no scheme");
    const auto slash = url.find('/', scheme + 3);
    Endpoint e;
    e.origin = url.substr(0, slash);
    e.path = slash == std::string::npos ? "" : url.substr(slash);
    while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    return e;
}

}  // namespace

LlmTranslation llm_translate(std::string_view question, const LlmConfig& config,
                             const QueryContext& ctx) {
    if (config.base_url.empty()) throw UnavailableError("no LLM endpoint configured");
    const Endpoint ep = split_url(config.base_url);

    nlohmann::json body;
    body["model"] = config.model;
    body["temperature"] = config.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& [role, content] : build_llm_messages(question, ctx)) {
        body["messages"].push_back({{"role", role}, {"content", content}});
    }

    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    std::string reply;
    try {
        httplib::Client client(ep.origin);
        client.set_connection_timeout(config.timeout_seconds, 0);
        client.set_read_timeout(config.timeout_seconds, 0);
        client.set_write_timeout(config.timeout_seconds, 0);
        auto res = client.Post(ep.path + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) {
            throw UnavailableError("LLM endpoint " + config.base_url +
                                   " unreachable: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw UnavailableError("LLM endpoint returned HTTP " + std::to_string(res->status));
        }
        const auto doc = nlohmann::json::parse(res->body);
        reply = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw UnavailableError(std::string("LLM endpoint returned a malformed response: ") +
                               e.what());
    } catch (const std::invalid_argument& e) {
        throw UnavailableError(std::string("LLM endpoint: ") + e.what());
    }

    LlmTranslation out;
    out.candidate = extract_sql(reply);
    try {
        out.validated = validate_sql(out.candidate, *ctx.features);
    } catch (const ValidationError& e) {
        out.rejection = e.what();
        try {
            out.structured_sql = to_sql(parse_query(question, ctx), ctx);
        } catch (const Error& pe) {
            out.structured_error = pe.what();
        }
    }
    return out;
}

}  // namespace xrl
