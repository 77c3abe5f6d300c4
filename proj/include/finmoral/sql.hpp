#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "finmoral/errors.hpp"
#include "finmoral/text.hpp"
#include "finmoral/value.hpp"

namespace finmoral::sql {

enum class AggregateFn { count, sum, avg, min, max };
enum class CompareOp { eq, ne, lt, le, gt, ge, contains };

inline std::string_view to_string(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::count: return "COUNT";
    case AggregateFn::sum: return "SUM";
    case AggregateFn::avg: return "AVG";
    case AggregateFn::min: return "MIN";
    case AggregateFn::max: return "MAX";
  }
  return "COUNT";
}

inline std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    case CompareOp::contains: return "CONTAINS";
  }
  return "=";
}

struct Predicate {
  std::string column;
  CompareOp op = CompareOp::eq;
  Value literal;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// `column` is "*" only for COUNT(*).
struct Aggregate {
  AggregateFn fn = AggregateFn::count;
  std::string column;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct OrderBy {
  std::string column;
  bool descending = false;

  friend bool operator==(const OrderBy&, const OrderBy&) = default;
};

using Projection = std::vector<std::string>;

/// SELECT (cols | FN(col)) [WHERE p (AND p)*] [ORDER BY col [ASC|DESC]] [LIMIT n]
/// over a single implicit table.
struct SqlQuery {
  std::variant<Projection, Aggregate> select;
  std::vector<Predicate> where;
  std::optional<OrderBy> order_by;
  std::optional<std::size_t> limit;

  bool is_aggregate() const { return std::holds_alternative<Aggregate>(select); }
  const Aggregate& aggregate() const { return std::get<Aggregate>(select); }
  const Projection& columns() const { return std::get<Projection>(select); }

  friend bool operator==(const SqlQuery&, const SqlQuery&) = default;
};

namespace detail {

inline constexpr std::array<std::string_view, 13> kReserved = {
    "SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "ORDER", "BY", "ASC", "DESC", "LIMIT", "CONTAINS", "GROUP"};

inline bool is_reserved(std::string_view word) {
  for (auto r : kReserved) {
    if (text::iequals(r, word)) return true;
  }
  return false;
}

inline bool is_ident_start(char c) { return text::is_alpha(c) || c == '_'; }
inline bool is_ident_char(char c) { return text::is_alnum(c) || c == '_'; }

inline bool is_plain_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  for (char c : s) {
    if (!is_ident_char(c)) return false;
  }
  return !is_reserved(s);
}

enum class TokenKind { word, quoted, string, number, op, lparen, rparen, comma, star, semicolon, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;
  std::size_t offset = 0;
};

inline std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const char c = s[i];
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(s[i])) ++i;
      out.push_back({TokenKind::word, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (c == '"' || c == '\'') {
      std::string body;
      ++i;
      bool closed = false;
      while (i < n) {
        if (s[i] == c) {
          if (i + 1 < n && s[i + 1] == c) {
            body.push_back(c);
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        body.push_back(s[i++]);
      }
      if (!closed) throw SqlSyntaxError(c == '"' ? "unterminated quoted identifier" : "unterminated string literal", start);
      out.push_back({c == '"' ? TokenKind::quoted : TokenKind::string, std::move(body), start});
      continue;
    }
    const bool starts_number = text::is_digit(c) || (c == '.' && i + 1 < n && text::is_digit(s[i + 1])) ||
                               ((c == '-' || c == '$') && i + 1 < n && (text::is_digit(s[i + 1]) || s[i + 1] == '.' || s[i + 1] == '$'));
    if (starts_number) {
      if (s[i] == '-') ++i;
      if (i < n && s[i] == '$') ++i;
      while (i < n && (text::is_digit(s[i]) || s[i] == '.')) ++i;
      if (i < n && (s[i] == '%' || s[i] == 'K' || s[i] == 'M' || s[i] == 'B' || s[i] == 'k' || s[i] == 'm' || s[i] == 'b') &&
          !(i + 1 < n && is_ident_char(s[i + 1]))) {
        ++i;
      }
      if (i < n && is_ident_char(s[i])) throw SqlSyntaxError("malformed number", start);
      out.push_back({TokenKind::number, std::string(s.substr(start, i - start)), start});
      continue;
    }
    auto two = s.substr(i, 2);
    if (two == "!=" || two == "<>" || two == "<=" || two == ">=") {
      out.push_back({TokenKind::op, std::string(two), start});
      i += 2;
      continue;
    }
    auto three = s.substr(i, 3);
    if (three == "\xE2\x89\xA0" || three == "\xE2\x89\xA4" || three == "\xE2\x89\xA5") {
      out.push_back({TokenKind::op, std::string(three), start});
      i += 3;
      continue;
    }
    switch (c) {
      case '=':
      case '<':
      case '>': out.push_back({TokenKind::op, std::string(1, c), start}); break;
      case '(': out.push_back({TokenKind::lparen, "(", start}); break;
      case ')': out.push_back({TokenKind::rparen, ")", start}); break;
      case ',': out.push_back({TokenKind::comma, ",", start}); break;
      case '*': out.push_back({TokenKind::star, "*", start}); break;
      case ';': out.push_back({TokenKind::semicolon, ";", start}); break;
      default: throw SqlSyntaxError(std::string("unexpected character '") + c + "'", start);
    }
    ++i;
  }
  out.push_back({TokenKind::end, "", n});
  return out;
}

class Parser {
public:
  explicit Parser(std::string_view s) : tokens_(lex(s)) {}

  SqlQuery parse() {
    SqlQuery q;
    expect_keyword("SELECT");
    if (peek().kind == TokenKind::word && peek(1).kind == TokenKind::lparen) {
      q.select = parse_aggregate();
    } else {
      Projection cols;
      cols.push_back(parse_column());
      while (peek().kind == TokenKind::comma) {
        next();
        cols.push_back(parse_column());
      }
      q.select = std::move(cols);
    }
    if (accept_keyword("WHERE")) {
      q.where.push_back(parse_predicate());
      while (accept_keyword("AND")) q.where.push_back(parse_predicate());
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      OrderBy ob;
      ob.column = parse_column();
      if (accept_keyword("DESC")) {
        ob.descending = true;
      } else {
        accept_keyword("ASC");
      }
      q.order_by = std::move(ob);
    }
    if (accept_keyword("LIMIT")) {
      const Token& t = peek();
      if (t.kind != TokenKind::number) throw SqlSyntaxError("expected row count", t.offset);
      std::size_t n = 0;
      for (char c : t.text) {
        if (!text::is_digit(c)) throw SqlSyntaxError("LIMIT needs a positive integer", t.offset);
        n = n * 10 + static_cast<std::size_t>(c - '0');
      }
      if (n == 0) throw SqlSyntaxError("LIMIT needs a positive integer", t.offset);
      q.limit = n;
      next();
    }
    if (peek().kind == TokenKind::semicolon) next();
    if (peek().kind != TokenKind::end) throw SqlSyntaxError("unexpected token '" + peek().text + "'", peek().offset);
    return q;
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t idx = pos_ + ahead;
    return idx < tokens_.size() ? tokens_[idx] : tokens_.back();
  }
  const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool accept_keyword(std::string_view kw) {
    if (peek().kind == TokenKind::word && text::iequals(peek().text, kw)) {
      next();
      return true;
    }
    return false;
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) throw SqlSyntaxError("expected " + std::string(kw), peek().offset);
  }

  std::string parse_column() {
    const Token& t = peek();
    if (t.kind == TokenKind::quoted) {
      next();
      return t.text;
    }
    if (t.kind == TokenKind::word && !is_reserved(t.text)) {
      next();
      return t.text;
    }
    throw SqlSyntaxError("expected column name", t.offset);
  }

  Aggregate parse_aggregate() {
    const Token& name = next();
    Aggregate agg;
    if (text::iequals(name.text, "COUNT")) agg.fn = AggregateFn::count;
    else if (text::iequals(name.text, "SUM")) agg.fn = AggregateFn::sum;
    else if (text::iequals(name.text, "AVG")) agg.fn = AggregateFn::avg;
    else if (text::iequals(name.text, "MIN")) agg.fn = AggregateFn::min;
    else if (text::iequals(name.text, "MAX")) agg.fn = AggregateFn::max;
    else throw SqlSyntaxError("unknown aggregate function " + name.text, name.offset);
    next();  // '('
    if (agg.fn == AggregateFn::count && peek().kind == TokenKind::star) {
      next();
      agg.column = "*";
    } else {
      agg.column = parse_column();
    }
    if (peek().kind != TokenKind::rparen) throw SqlSyntaxError("expected ')'", peek().offset);
    next();
    return agg;
  }

  Predicate parse_predicate() {
    Predicate p;
    p.column = parse_column();
    const Token& op = peek();
    if (op.kind == TokenKind::word && text::iequals(op.text, "CONTAINS")) {
      p.op = CompareOp::contains;
    } else if (op.kind == TokenKind::op) {
      if (op.text == "=") p.op = CompareOp::eq;
      else if (op.text == "!=" || op.text == "<>" || op.text == "\xE2\x89\xA0") p.op = CompareOp::ne;
      else if (op.text == "<") p.op = CompareOp::lt;
      else if (op.text == "<=" || op.text == "\xE2\x89\xA4") p.op = CompareOp::le;
      else if (op.text == ">") p.op = CompareOp::gt;
      else p.op = CompareOp::ge;
    } else {
      throw SqlSyntaxError("expected comparison operator", op.offset);
    }
    next();
    const Token& lit = peek();
    if (lit.kind == TokenKind::number) {
      p.literal = parse_value(lit.text);
      if (!p.literal.is_number()) throw SqlSyntaxError("malformed number", lit.offset);
    } else if (lit.kind == TokenKind::string) {
      p.literal = parse_value(lit.text);
    } else {
      throw SqlSyntaxError("expected literal", lit.offset);
    }
    next();
    return p;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

inline std::string quote(std::string_view s, char q) {
  std::string out(1, q);
  for (char c : s) {
    if (c == q) out.push_back(q);
    out.push_back(c);
  }
  out.push_back(q);
  return out;
}

}  // namespace detail

/// Parses the supported subset. Keywords are case-insensitive; identifiers
/// may be double-quoted to carry spaces or punctuation. Throws
/// SqlSyntaxError with the byte offset of the offending token.
inline SqlQuery parse_sql(std::string_view s) { return detail::Parser(s).parse(); }

inline std::string render_identifier(std::string_view name) {
  if (name == "*") return "*";
  return detail::is_plain_identifier(name) ? std::string(name) : detail::quote(name, '"');
}

inline std::string render_literal(const Value& v) {
  switch (v.kind) {
    case ValueKind::number: return to_string(v);
    case ValueKind::date: return "'" + v.date.iso() + "'";
    case ValueKind::text: return detail::quote(text::trim(v.surface), '\'');
  }
  return {};
}

/// Canonical text form; parse_sql(render(q)) == q.
inline std::string render(const SqlQuery& q) {
  std::string out = "SELECT ";
  if (q.is_aggregate()) {
    const auto& agg = q.aggregate();
    out += std::string(to_string(agg.fn)) + "(" + render_identifier(agg.column) + ")";
  } else {
    const auto& cols = q.columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out += ", ";
      out += render_identifier(cols[i]);
    }
  }
  for (std::size_t i = 0; i < q.where.size(); ++i) {
    out += i ? " AND " : " WHERE ";
    const auto& p = q.where[i];
    out += render_identifier(p.column) + " " + std::string(to_string(p.op)) + " " + render_literal(p.literal);
  }
  if (q.order_by) {
    out += " ORDER BY " + render_identifier(q.order_by->column) + (q.order_by->descending ? " DESC" : " ASC");
  }
  if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
  return out;
}

}  // namespace finmoral::sql
