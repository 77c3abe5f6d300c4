#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "finmoral/sql.hpp"
#include "finmoral/table.hpp"

namespace finmoral::sql {

struct ExecResult {
  /// Projection rows; empty for aggregates.
  std::vector<std::vector<Value>> cells;
  /// Aggregate result; absent for projections.
  std::optional<Value> scalar;
  /// Rows that survived filtering and LIMIT.
  std::size_t row_count = 0;
  bool executed_ok = false;
  std::string error;
};

namespace detail {

inline std::string unknown_column(std::string_view name) { return "unknown column \"" + std::string(name) + "\""; }

inline int kind_rank(ValueKind k) {
  switch (k) {
    case ValueKind::number: return 0;
    case ValueKind::date: return 1;
    case ValueKind::text: return 2;
  }
  return 3;
}

/// Sort key order: numbers, then dates, then text; naturally within a kind,
/// text case-insensitively.
inline bool value_less(const Value& a, const Value& b) {
  if (a.kind != b.kind) return kind_rank(a.kind) < kind_rank(b.kind);
  switch (a.kind) {
    case ValueKind::number: return a.number < b.number;
    case ValueKind::date: return a.date < b.date;
    case ValueKind::text: return text::lower(text::trim(a.surface)) < text::lower(text::trim(b.surface));
  }
  return false;
}

/// A cell whose kind differs from the literal's never satisfies a predicate.
inline bool matches(const Value& cell, const Predicate& p) {
  const Value& lit = p.literal;
  if (cell.kind != lit.kind) return false;
  if (p.op == CompareOp::contains) {
    return text::lower(text::trim(cell.surface)).find(text::lower(text::trim(lit.surface))) != std::string::npos;
  }
  int cmp = 0;
  switch (cell.kind) {
    case ValueKind::number: cmp = cell.number < lit.number ? -1 : (lit.number < cell.number ? 1 : 0); break;
    case ValueKind::date: cmp = cell.date < lit.date ? -1 : (lit.date < cell.date ? 1 : 0); break;
    case ValueKind::text: cmp = text::iequals(text::trim(cell.surface), text::trim(lit.surface)) ? 0 : 1; break;
  }
  switch (p.op) {
    case CompareOp::eq: return cmp == 0;
    case CompareOp::ne: return cmp != 0;
    case CompareOp::lt: return cmp < 0;
    case CompareOp::le: return cmp <= 0;
    case CompareOp::gt: return cmp > 0;
    case CompareOp::ge: return cmp >= 0;
    case CompareOp::contains: return false;
  }
  return false;
}

}  // namespace detail

/// Checks column references and predicate typing against the table.
/// Returns an error message, or nullopt when the query is executable.
///
/// Typing: CONTAINS needs a text column and text literal; ordering
/// comparisons need a number or date column and a literal of that kind;
/// equality needs the literal kind to equal the column kind. SUM and AVG
/// need number columns, MIN and MAX number or date columns.
inline std::optional<std::string> validate(const SqlQuery& q, const Table& t) {
  if (q.is_aggregate()) {
    const auto& agg = q.aggregate();
    if (agg.column == "*") {
      if (agg.fn != AggregateFn::count) return std::string(to_string(agg.fn)) + "(*) is not supported";
    } else {
      auto col = t.column_index(agg.column);
      if (!col) return detail::unknown_column(agg.column);
      const ValueKind k = t.column_types[*col];
      if ((agg.fn == AggregateFn::sum || agg.fn == AggregateFn::avg) && k != ValueKind::number) {
        return "type mismatch: " + std::string(to_string(agg.fn)) + " over " + std::string(to_string(k)) + " column";
      }
      if ((agg.fn == AggregateFn::min || agg.fn == AggregateFn::max) && k == ValueKind::text) {
        return "type mismatch: " + std::string(to_string(agg.fn)) + " over text column";
      }
    }
  } else {
    for (const auto& c : q.columns()) {
      if (!t.column_index(c)) return detail::unknown_column(c);
    }
  }
  for (const auto& p : q.where) {
    auto col = t.column_index(p.column);
    if (!col) return detail::unknown_column(p.column);
    const ValueKind k = t.column_types[*col];
    const ValueKind lk = p.literal.kind;
    const std::string where = "type mismatch: " + std::string(to_string(lk)) + " literal " +
                              std::string(to_string(p.op)) + " on " + std::string(to_string(k)) + " column \"" +
                              p.column + "\"";
    switch (p.op) {
      case CompareOp::contains:
        if (k != ValueKind::text || lk != ValueKind::text) return where;
        break;
      case CompareOp::lt:
      case CompareOp::le:
      case CompareOp::gt:
      case CompareOp::ge:
        if (k == ValueKind::text || lk != k) return where;
        break;
      case CompareOp::eq:
      case CompareOp::ne:
        if (lk != k) return where;
        break;
    }
  }
  if (q.order_by && !t.column_index(q.order_by->column)) return detail::unknown_column(q.order_by->column);
  return std::nullopt;
}

/// Runs the query: filter by every predicate, stable-sort, truncate to
/// LIMIT, then project or aggregate. Errors are reported in the result,
/// never thrown. The table is not modified.
inline ExecResult execute(const SqlQuery& q, const Table& t) {
  ExecResult r;
  if (auto err = validate(q, t)) {
    r.error = *err;
    return r;
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    bool keep = true;
    for (const auto& p : q.where) {
      if (!detail::matches(t.rows[i][*t.column_index(p.column)], p)) {
        keep = false;
        break;
      }
    }
    if (keep) rows.push_back(i);
  }
  if (q.order_by) {
    const std::size_t col = *t.column_index(q.order_by->column);
    const bool desc = q.order_by->descending;
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return desc ? detail::value_less(t.rows[b][col], t.rows[a][col]) : detail::value_less(t.rows[a][col], t.rows[b][col]);
    });
  }
  if (q.limit && rows.size() > *q.limit) rows.resize(*q.limit);
  r.row_count = rows.size();

  if (!q.is_aggregate()) {
    std::vector<std::size_t> cols;
    for (const auto& c : q.columns()) cols.push_back(*t.column_index(c));
    for (std::size_t i : rows) {
      std::vector<Value> out;
      out.reserve(cols.size());
      for (std::size_t j : cols) out.push_back(t.rows[i][j]);
      r.cells.push_back(std::move(out));
    }
    r.executed_ok = true;
    return r;
  }

  const auto& agg = q.aggregate();
  if (agg.fn == AggregateFn::count) {
    r.scalar = Value::of_number(Decimal(static_cast<long long>(rows.size())));
    r.executed_ok = true;
    return r;
  }
  const std::size_t col = *t.column_index(agg.column);
  const ValueKind kind = t.column_types[col];
  std::vector<const Value*> values;
  for (std::size_t i : rows) {
    if (t.rows[i][col].kind == kind) values.push_back(&t.rows[i][col]);
  }
  if (values.empty() && agg.fn != AggregateFn::sum) {
    r.error = std::string(to_string(agg.fn)) + " over zero rows";
    return r;
  }
  switch (agg.fn) {
    case AggregateFn::sum:
    case AggregateFn::avg: {
      Decimal total;
      bool all_percent = !values.empty();
      for (const Value* v : values) {
        total = total + v->number;
        all_percent = all_percent && v->percent;
      }
      if (agg.fn == AggregateFn::avg) total = total / Decimal(static_cast<long long>(values.size()));
      r.scalar = Value::of_number(total, all_percent);
      break;
    }
    case AggregateFn::min:
    case AggregateFn::max: {
      const Value* best = values.front();
      for (const Value* v : values) {
        if (agg.fn == AggregateFn::min ? detail::value_less(*v, *best) : detail::value_less(*best, *v)) best = v;
      }
      r.scalar = *best;
      break;
    }
    case AggregateFn::count: break;
  }
  r.executed_ok = true;
  return r;
}

}  // namespace finmoral::sql
