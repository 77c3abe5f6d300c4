#pragma once

// Reference implementations and random instance generators used by the
// unit tests and the acceptance runner. They share only data types with
// the library, never its evaluation code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "finmoral/finmoral.hpp"

namespace oracle {

using finmoral::Candidate;
using finmoral::Decimal;
using finmoral::Modality;
using finmoral::Table;
using finmoral::Value;
using finmoral::ValueKind;
namespace sql = finmoral::sql;

// ---------------------------------------------------------------- SQL

inline std::string fold(const std::string& s) {
  std::string t(finmoral::text::trim(s));
  for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return t;
}

/// -1, 0, 1 ordering used for ORDER BY, MIN and MAX.
inline int order(const Value& a, const Value& b) {
  static const std::map<ValueKind, int> rank{{ValueKind::number, 0}, {ValueKind::date, 1}, {ValueKind::text, 2}};
  if (a.kind != b.kind) return rank.at(a.kind) < rank.at(b.kind) ? -1 : 1;
  if (a.kind == ValueKind::number) return a.number < b.number ? -1 : (b.number < a.number ? 1 : 0);
  if (a.kind == ValueKind::date) {
    const auto ka = std::tie(a.date.year, a.date.month, a.date.day);
    const auto kb = std::tie(b.date.year, b.date.month, b.date.day);
    return ka < kb ? -1 : (kb < ka ? 1 : 0);
  }
  const auto fa = fold(a.surface), fb = fold(b.surface);
  return fa < fb ? -1 : (fb < fa ? 1 : 0);
}

inline bool holds(const Value& cell, const sql::Predicate& p) {
  if (cell.kind != p.literal.kind) return false;
  using Op = sql::CompareOp;
  if (p.op == Op::contains) return fold(cell.surface).find(fold(p.literal.surface)) != std::string::npos;
  int c;
  if (cell.kind == ValueKind::text) {
    c = fold(cell.surface) == fold(p.literal.surface) ? 0 : 1;
  } else {
    c = order(cell, p.literal);
  }
  switch (p.op) {
    case Op::eq: return c == 0;
    case Op::ne: return c != 0;
    case Op::lt: return c < 0;
    case Op::le: return c <= 0;
    case Op::gt: return c > 0;
    case Op::ge: return c >= 0;
    default: return false;
  }
}

struct SqlOutcome {
  bool ok = false;
  std::vector<std::vector<Value>> cells;
  std::optional<Value> scalar;
  std::size_t rows = 0;
};

inline std::size_t col(const Table& t, const std::string& name) {
  for (std::size_t j = 0; j < t.headers.size(); ++j) {
    if (fold(t.headers[j]) == fold(name)) return j;
  }
  return std::numeric_limits<std::size_t>::max();
}

/// Brute-force evaluation of a query already known to be valid.
inline SqlOutcome run_sql(const sql::SqlQuery& q, const Table& t) {
  std::vector<std::vector<Value>> rows;
  for (const auto& r : t.rows) {
    bool ok = true;
    for (const auto& p : q.where) ok = ok && holds(r[col(t, p.column)], p);
    if (ok) rows.push_back(r);
  }
  if (q.order_by) {
    const std::size_t c = col(t, q.order_by->column);
    const int dir = q.order_by->descending ? -1 : 1;
    // insertion sort: stable by construction
    for (std::size_t i = 1; i < rows.size(); ++i) {
      for (std::size_t k = i; k > 0 && dir * order(rows[k][c], rows[k - 1][c]) < 0; --k) std::swap(rows[k], rows[k - 1]);
    }
  }
  if (q.limit && rows.size() > *q.limit) rows.erase(rows.begin() + static_cast<long>(*q.limit), rows.end());

  SqlOutcome out;
  out.rows = rows.size();
  if (!q.is_aggregate()) {
    for (const auto& r : rows) {
      std::vector<Value> o;
      for (const auto& name : q.columns()) o.push_back(r[col(t, name)]);
      out.cells.push_back(o);
    }
    out.ok = true;
    return out;
  }
  const auto& agg = q.aggregate();
  using Fn = sql::AggregateFn;
  if (agg.fn == Fn::count) {
    out.scalar = Value::of_number(Decimal(static_cast<long long>(rows.size())));
    out.ok = true;
    return out;
  }
  const std::size_t c = col(t, agg.column);
  std::vector<Value> vals;
  for (const auto& r : rows) {
    if (r[c].kind == t.column_types[c]) vals.push_back(r[c]);
  }
  if (agg.fn == Fn::sum || agg.fn == Fn::avg) {
    if (vals.empty() && agg.fn == Fn::avg) return out;
    Decimal s(0);
    std::size_t pct = 0;
    for (const auto& v : vals) {
      s = s + v.number;
      pct += v.percent ? 1 : 0;
    }
    if (agg.fn == Fn::avg) s = s / Decimal(static_cast<long long>(vals.size()));
    out.scalar = Value::of_number(s, !vals.empty() && pct == vals.size());
    out.ok = true;
    return out;
  }
  if (vals.empty()) return out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < vals.size(); ++i) {
    const int c2 = order(vals[i], vals[best]);
    if (agg.fn == Fn::min ? c2 < 0 : c2 > 0) best = i;
  }
  out.scalar = vals[best];
  out.ok = true;
  return out;
}

inline bool same_value(const Value& a, const Value& b) {
  return a.kind == b.kind && a.surface == b.surface && a.percent == b.percent &&
         (a.kind != ValueKind::number || a.number == b.number) && (a.kind != ValueKind::date || a.date == b.date);
}

inline bool same_outcome(const SqlOutcome& ref, const sql::ExecResult& got) {
  if (ref.ok != got.executed_ok) return false;
  if (!ref.ok) return true;
  if (ref.rows != got.row_count || ref.scalar.has_value() != got.scalar.has_value()) return false;
  if (ref.scalar && !same_value(*ref.scalar, *got.scalar)) return false;
  if (ref.cells.size() != got.cells.size()) return false;
  for (std::size_t i = 0; i < ref.cells.size(); ++i) {
    if (ref.cells[i].size() != got.cells[i].size()) return false;
    for (std::size_t j = 0; j < ref.cells[i].size(); ++j) {
      if (!same_value(ref.cells[i][j], got.cells[i][j])) return false;
    }
  }
  return true;
}

struct SqlInstance {
  Table table;
  sql::SqlQuery query;
};

inline std::string random_word(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"alpha", "Beta", "gamma", "delta", "Cloud", "devices",
                                                 "north", "South", "retail", "Energy", "beta", "ALPHA"};
  return words[rng() % words.size()];
}

inline std::string random_number_text(std::mt19937_64& rng, bool percent) {
  const long long whole = static_cast<long long>(rng() % 2000) - 500;
  const int frac = static_cast<int>(rng() % 4);
  std::string s = std::to_string(whole);
  if (frac == 1) s += "." + std::to_string(rng() % 10);
  if (frac == 2) s += "." + std::to_string(10 + rng() % 90);
  if (frac == 3 && whole >= 1000) s = s.substr(0, s.size() - 3) + "," + s.substr(s.size() - 3);
  if (percent) s += "%";
  return s;
}

inline std::string random_date_text(std::mt19937_64& rng) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", 2015 + static_cast<int>(rng() % 10), 1 + static_cast<int>(rng() % 12),
                1 + static_cast<int>(rng() % 28));
  return buf;
}

/// Random table (up to 20 rows x 6 columns) and a query that validates
/// against it: typed predicates, optional ORDER BY and LIMIT.
inline SqlInstance random_sql_instance(std::mt19937_64& rng) {
  const std::size_t ncols = 1 + rng() % 6;
  const std::size_t nrows = rng() % 21;
  std::vector<std::string> headers;
  std::vector<int> style;  // 0 number, 1 percent, 2 text, 3 date
  static const std::vector<std::string> names = {"Year", "Revenue", "Net Profit", "Region", "Margin", "Date",
                                                 "Segment", "Units", "order", "Growth Rate"};
  std::vector<std::string> pool = names;
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t j = 0; j < ncols; ++j) {
    headers.push_back(pool[j]);
    style.push_back(static_cast<int>(rng() % 4));
  }
  std::vector<std::vector<std::string>> raw;
  for (std::size_t i = 0; i < nrows; ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (rng() % 12 == 0) {
        row.push_back(rng() % 2 ? "n/a" : "");
        continue;
      }
      switch (style[j]) {
        case 0: row.push_back(random_number_text(rng, false)); break;
        case 1: row.push_back(random_number_text(rng, true)); break;
        case 2: row.push_back(random_word(rng)); break;
        default: row.push_back(random_date_text(rng)); break;
      }
    }
    raw.push_back(row);
  }
  SqlInstance inst{finmoral::make_table(headers, raw), {}};
  const Table& t = inst.table;

  auto literal_for = [&](std::size_t j) -> Value {
    // Reuse a cell of the column's kind half the time so predicates hit.
    std::vector<const Value*> same;
    for (const auto& r : t.rows) {
      if (r[j].kind == t.column_types[j]) same.push_back(&r[j]);
    }
    if (!same.empty() && rng() % 2) return *same[rng() % same.size()];
    switch (t.column_types[j]) {
      case ValueKind::number: return finmoral::parse_value(random_number_text(rng, rng() % 2));
      case ValueKind::date: return finmoral::parse_value(random_date_text(rng));
      case ValueKind::text: return Value::of_text(random_word(rng));
    }
    return Value::of_text("x");
  };

  sql::SqlQuery& q = inst.query;
  std::vector<std::size_t> numeric, orderable;
  for (std::size_t j = 0; j < ncols; ++j) {
    if (t.column_types[j] == ValueKind::number) numeric.push_back(j);
    if (t.column_types[j] != ValueKind::text) orderable.push_back(j);
  }
  const int shape = static_cast<int>(rng() % 3);
  if (shape == 0) {
    sql::Projection cols;
    const std::size_t n = 1 + rng() % ncols;
    for (std::size_t k = 0; k < n; ++k) cols.push_back(t.headers[rng() % ncols]);
    q.select = cols;
  } else {
    sql::Aggregate agg;
    const int fn = static_cast<int>(rng() % 5);
    if (fn == 0 || (fn <= 2 && numeric.empty()) || (fn >= 3 && orderable.empty())) {
      agg.fn = sql::AggregateFn::count;
      agg.column = "*";
    } else if (fn <= 2) {
      agg.fn = fn == 1 ? sql::AggregateFn::sum : sql::AggregateFn::avg;
      agg.column = t.headers[numeric[rng() % numeric.size()]];
    } else {
      agg.fn = fn == 3 ? sql::AggregateFn::min : sql::AggregateFn::max;
      agg.column = t.headers[orderable[rng() % orderable.size()]];
    }
    q.select = agg;
  }
  const std::size_t npred = rng() % 3;
  for (std::size_t k = 0; k < npred; ++k) {
    const std::size_t j = rng() % ncols;
    sql::Predicate p;
    p.column = t.headers[j];
    p.literal = literal_for(j);
    const ValueKind kind = t.column_types[j];
    if (kind == ValueKind::text) {
      p.op = rng() % 2 ? sql::CompareOp::contains : (rng() % 2 ? sql::CompareOp::eq : sql::CompareOp::ne);
      if (p.op == sql::CompareOp::contains) p.literal = Value::of_text(fold(p.literal.surface).substr(0, 3));
    } else {
      p.op = static_cast<sql::CompareOp>(rng() % 6);
    }
    q.where.push_back(p);
  }
  if (rng() % 2) q.order_by = sql::OrderBy{t.headers[rng() % ncols], rng() % 2 == 1};
  if (rng() % 3 == 0) q.limit = 1 + rng() % 8;
  return inst;
}

// ---------------------------------------------------------- expressions

using Rational = boost::multiprecision::cpp_rational;

struct NaiveResult {
  bool div_by_zero = false;
  double value = 0.0;
  double error = 0.0;  // forward error bound of `value`
  Rational exact;      // only used to decide exact zero divisors
};

inline Rational exact_of(const Decimal& d) { return d.rational(); }

/// Straight recursive evaluation in doubles, with a first-order error
/// bound, plus an exact shadow used only to detect zero divisors.
inline NaiveResult naive_eval(const finmoral::ExpressionTree& t, const std::vector<finmoral::NumberMention>& nums) {
  constexpr double u = std::numeric_limits<double>::epsilon();
  NaiveResult r;
  if (t.is_leaf()) {
    const auto& v = nums[t.leaf_index()].value;
    r.exact = exact_of(v.number);
    r.value = v.number.to_double();
    r.error = std::abs(r.value) * u;
    return r;
  }
  const NaiveResult a = naive_eval(t.left(), nums);
  const NaiveResult b = naive_eval(t.right(), nums);
  if (a.div_by_zero || b.div_by_zero) {
    r.div_by_zero = true;
    return r;
  }
  using finmoral::OpKind;
  switch (t.op()) {
    case OpKind::add:
      r.value = a.value + b.value;
      r.exact = a.exact + b.exact;
      r.error = a.error + b.error + std::abs(r.value) * u;
      break;
    case OpKind::sub:
      r.value = a.value - b.value;
      r.exact = a.exact - b.exact;
      r.error = a.error + b.error + std::abs(r.value) * u;
      break;
    case OpKind::mul:
      r.value = a.value * b.value;
      r.exact = a.exact * b.exact;
      r.error = std::abs(a.value) * b.error + std::abs(b.value) * a.error + a.error * b.error + std::abs(r.value) * u;
      break;
    case OpKind::div:
    case OpKind::ratio:
    case OpKind::pct_change: {
      if (b.exact == 0) {
        r.div_by_zero = true;
        return r;
      }
      const bool pct = t.op() == OpKind::pct_change;
      const double num = pct ? a.value - b.value : a.value;
      const double num_err = pct ? a.error + b.error + std::abs(num) * u : a.error;
      r.exact = (pct ? a.exact - b.exact : a.exact) / b.exact;
      r.value = num / b.value;
      const double denom = std::abs(b.value) - b.error;
      r.error = denom > 0 ? (num_err + std::abs(r.value) * b.error) / denom + std::abs(r.value) * u
                          : std::numeric_limits<double>::infinity();
      break;
    }
  }
  return r;
}

/// Random tree of depth <= max_depth over `n` leaves.
inline finmoral::ExpressionTree random_tree(std::mt19937_64& rng, std::size_t n, std::size_t max_depth) {
  if (max_depth == 0 || rng() % 4 == 0) return finmoral::ExpressionTree::leaf(rng() % n);
  const auto op = finmoral::kAllOps[rng() % finmoral::kAllOps.size()];
  auto l = random_tree(rng, n, max_depth - 1);
  auto r = random_tree(rng, n, max_depth - 1);
  return finmoral::ExpressionTree::apply(op, std::move(l), std::move(r));
}

inline std::vector<finmoral::NumberMention> random_numbers(std::mt19937_64& rng, std::size_t n) {
  static const std::vector<std::string> specials = {"0", "0.0", "1", "-1", "0.1", "0.2", "0.3", "5.6", "5.0", "12%",
                                                    "$1.4B", "2.5K", "(3)", "1,250"};
  std::vector<finmoral::NumberMention> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = rng() % 3 == 0 ? specials[rng() % specials.size()] : random_number_text(rng, rng() % 5 == 0);
    finmoral::NumberMention m;
    m.value = finmoral::parse_value(s);
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------- aggregation

/// Index chosen by sorting on (-S, -C, modality priority, sample index, position).
inline std::size_t brute_select(const std::vector<Candidate>& a, const std::vector<double>& s,
                                const std::vector<double>& c) {
  std::vector<std::size_t> idx(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return std::make_tuple(-s[x], -c[x], finmoral::priority(a[x].modality), a[x].sample_index, x) <
           std::make_tuple(-s[y], -c[y], finmoral::priority(a[y].modality), a[y].sample_index, y);
  });
  return idx.front();
}

inline std::vector<double> brute_consistency(const std::vector<Candidate>& a, double lambda) {
  std::map<std::string, std::size_t> freq;
  for (const auto& x : a) ++freq[x.normalized];
  std::vector<double> c;
  for (const auto& x : a) c.push_back(static_cast<double>(freq[x.normalized]) / static_cast<double>(a.size()) + lambda * x.heuristic);
  return c;
}

inline std::vector<double> brute_totals(const std::vector<std::vector<double>>& sigma) {
  std::vector<double> s;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < sigma.size(); ++j) acc += (i == j) ? 0.0 : sigma[i][j];
    s.push_back(acc);
  }
  return s;
}

/// Candidate set of size 1..8 with modality layout sql?, num?, cot 1..k and
/// answers drawn from a small alphabet so frequencies repeat.
inline std::vector<Candidate> random_candidates(std::mt19937_64& rng, std::size_t max_size = 8) {
  static const std::vector<std::string> answers = {"12%", "+12.0%", "10%", "1.2", "$1.2", "Yes", "no"};
  const std::size_t n = 1 + rng() % max_size;
  std::vector<Candidate> a;
  const bool sql = rng() % 2, num = rng() % 2;
  int sample = 1;
  for (std::size_t i = 0; i < n; ++i) {
    Modality m = Modality::cot;
    if (i == 0 && sql) m = Modality::sql;
    else if (i == (sql ? 1u : 0u) && num) m = Modality::num;
    const double h = static_cast<double>(rng() % 5) / 4.0;
    a.push_back(Candidate::make(m, answers[rng() % answers.size()], h, m == Modality::cot ? sample++ : 0));
  }
  return a;
}

/// Dyadic values keep every sum exact, so ties survive shifts.
inline double dyadic(std::mt19937_64& rng) { return static_cast<double>(static_cast<int>(rng() % 33) - 16) / 8.0; }

inline std::vector<std::vector<double>> random_antisymmetric(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      s[i][j] = dyadic(rng);
      s[j][i] = -s[i][j];
    }
  }
  return s;
}

// --------------------------------------------------------------- voting

/// Symbol with the highest count; ties go to the symbol seen first.
/// Returns the position of that symbol's first occurrence.
inline std::optional<std::size_t> brute_vote(const std::vector<std::string>& xs) {
  if (xs.empty()) return std::nullopt;
  std::map<std::string, std::size_t> count, first;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ++count[xs[i]];
    first.try_emplace(xs[i], i);
  }
  std::size_t best_count = 0;
  for (const auto& [k, c] : count) best_count = std::max(best_count, c);
  std::size_t best = xs.size();
  for (const auto& [k, c] : count) {
    if (c == best_count) best = std::min(best, first[k]);
  }
  return best;
}

// ---------------------------------------------------------------- misc

inline std::string random_answer_string(std::mt19937_64& rng) {
  static const std::vector<std::string> atoms = {
      "0", "1", "2", "5", "9", ".", ",", "%", "$", "+", "-", " ", "  ", "\"", "'", "a", "the", "an", "K", "M", "B",
      "k", "(", ")", "\xE2\x82\xAC", "\xE2\x88\x92", "\xE2\x80\x9C", "\xE2\x80\x9D", "Q", "x", "Yes", "\t", "e", "E",
      "1,000", "12.0", "0.50"};
  std::string s;
  const std::size_t n = rng() % 9;
  for (std::size_t i = 0; i < n; ++i) s += atoms[rng() % atoms.size()];
  return s;
}

}  // namespace oracle
