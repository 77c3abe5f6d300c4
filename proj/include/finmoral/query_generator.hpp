#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "finmoral/candidate.hpp"
#include "finmoral/context.hpp"
#include "finmoral/errors.hpp"
#include "finmoral/sql.hpp"
#include "finmoral/sql_exec.hpp"

namespace finmoral {

/// Maps a question to ranked SQL candidates. Implementations must tolerate
/// concurrent calls. `schema` may be null when schema metadata is withheld.
class QueryGenerator {
public:
  virtual ~QueryGenerator() = default;
  virtual std::vector<sql::SqlQuery> generate(std::string_view question, const Table& table,
                                              const Schema* schema) const = 0;
};

/// Phrase-to-column rewrites for the rule-based generator. File format: one
/// `phrase<TAB>column` per line, UTF-8; blank lines and lines starting with
/// '#' are skipped.
struct SynonymTable {
  std::vector<std::pair<std::string, std::string>> entries;

  static SynonymTable defaults() {
    return SynonymTable{{
        {"net income", "net profit"},
        {"net earnings", "net profit"},
        {"sales", "revenue"},
        {"turnover", "revenue"},
        {"eps", "earnings per share"},
    }};
  }

  static SynonymTable parse(std::string_view content) {
    SynonymTable t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
      std::size_t eol = content.find('\n', pos);
      if (eol == std::string_view::npos) eol = content.size();
      std::string_view line = content.substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (text::trim(line).empty() || line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw ConfigError("synonym table line " + std::to_string(line_no) + ": expected phrase<TAB>column");
      }
      t.entries.emplace_back(text::lower(text::trim(line.substr(0, tab))), std::string(text::trim(line.substr(tab + 1))));
    }
    return t;
  }

  static SynonymTable load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open synonym table " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  void merge(const SynonymTable& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  }
};

namespace detail {

inline bool is_stopword(std::string_view w) {
  static const std::set<std::string_view> kStop = {"the", "of", "in", "a", "an", "for", "and", "to",
                                                   "by", "on", "at", "per", "is", "was", "what", "s"};
  return kStop.count(w) > 0;
}

inline std::string singular(std::string_view w) {
  if (w.size() > 3 && w.back() == 's') return std::string(w.substr(0, w.size() - 1));
  return std::string(w);
}

inline bool token_match(std::string_view a, std::string_view b) {
  return a == b || singular(a) == singular(b);
}

/// Header tokens without a trailing "(...)" unit annotation or stopwords.
inline std::vector<std::string> header_tokens(std::string_view header) {
  std::string_view h = text::trim(header);
  if (!h.empty() && h.back() == ')') {
    const auto open = h.rfind('(');
    if (open != std::string_view::npos) h = text::trim(h.substr(0, open));
  }
  std::vector<std::string> out;
  for (auto& tok : text::tokenize(h)) {
    if (!is_stopword(tok)) out.push_back(std::move(tok));
  }
  return out;
}

inline bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

inline bool contains_phrase(std::string_view haystack_lower, std::string_view phrase_lower) {
  std::size_t pos = haystack_lower.find(phrase_lower);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !text::is_word_byte(haystack_lower[pos - 1]);
    const std::size_t end = pos + phrase_lower.size();
    const bool right_ok = end >= haystack_lower.size() || !text::is_word_byte(haystack_lower[end]);
    if (left_ok && right_ok) return true;
    pos = haystack_lower.find(phrase_lower, pos + 1);
  }
  return false;
}

}  // namespace detail

/// Offline baseline: matches question tokens to column names and question
/// literals to cell values, then fills projection and aggregate templates.
///
/// A projection needs at least one literal predicate to pick rows; an
/// aggregate needs a trigger word (sum/total, average/mean, how many/count,
/// largest/max, smallest/min) and, without schema types, is not attempted.
class RuleBasedQueryGenerator final : public QueryGenerator {
public:
  explicit RuleBasedQueryGenerator(SynonymTable synonyms = SynonymTable::defaults())
      : synonyms_(std::move(synonyms)) {}

  std::vector<sql::SqlQuery> generate(std::string_view question, const Table& table,
                                      const Schema* schema) const override {
    const std::string q_lower = text::lower(question);
    std::vector<std::string> tokens = text::tokenize(question);
    for (const auto& [phrase, target] : synonyms_.entries) {
      if (detail::contains_sequence(tokens, text::tokenize(phrase))) {
        for (auto& t : text::tokenize(target)) tokens.push_back(std::move(t));
      }
    }

    const auto& names = schema ? schema->column_names : table.headers;
    const std::size_t ncols = std::min(names.size(), table.column_count());

    // Literal predicates: question numbers and text phrases found in cells.
    const auto q_numbers = scan_numbers(question, Source::question);
    std::vector<sql::Predicate> literals;
    std::set<std::size_t> literal_columns;
    for (std::size_t j = 0; j < ncols; ++j) {
      for (const auto& row : table.rows) {
        const Value& cell = row[j];
        bool hit = false;
        Value lit;
        if (cell.is_number()) {
          for (const auto& m : q_numbers) {
            if (m.value.number == cell.number) {
              hit = true;
              lit = Value::of_number(cell.number, cell.percent);
              break;
            }
          }
        } else {
          const std::string cell_lower = text::lower(text::trim(cell.surface));
          if (cell_lower.size() >= 3 && detail::contains_phrase(q_lower, cell_lower)) {
            hit = true;
            lit = cell.is_date() ? Value::of_date(cell.date) : Value::of_text(std::string(text::trim(cell.surface)));
          }
        }
        if (hit) {
          literals.push_back(sql::Predicate{names[j], sql::CompareOp::eq, lit});
          literal_columns.insert(j);
          break;
        }
      }
    }

    // Target columns by header-token coverage.
    std::vector<std::pair<std::size_t, double>> targets;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (literal_columns.count(j)) continue;
      const auto htoks = detail::header_tokens(names[j]);
      if (htoks.empty()) continue;
      std::size_t matched = 0;
      for (const auto& h : htoks) {
        for (const auto& t : tokens) {
          if (detail::token_match(h, t)) {
            ++matched;
            break;
          }
        }
      }
      const double score = static_cast<double>(matched) / static_cast<double>(htoks.size());
      if (matched > 0 && score >= 0.5) targets.emplace_back(j, score);
    }

    std::vector<std::pair<double, sql::SqlQuery>> scored;
    const double literal_bonus = 0.25 * static_cast<double>(literals.size());
    if (schema) {
      for (const sql::AggregateFn fn : triggers(q_lower, tokens)) {
        if (fn == sql::AggregateFn::count) {
          if (targets.empty() && literals.empty()) continue;
          sql::SqlQuery q;
          q.select = sql::Aggregate{fn, "*"};
          q.where = literals;
          scored.emplace_back(1.0 + literal_bonus, std::move(q));
          continue;
        }
        for (const auto& [j, score] : targets) {
          const ValueKind k = schema->column_types[j];
          const bool numeric_only = fn == sql::AggregateFn::sum || fn == sql::AggregateFn::avg;
          if (k == ValueKind::text || (numeric_only && k != ValueKind::number)) continue;
          sql::SqlQuery q;
          q.select = sql::Aggregate{fn, names[j]};
          q.where = literals;
          scored.emplace_back(1.0 + score + literal_bonus, std::move(q));
        }
      }
    }
    if (!literals.empty()) {
      for (const auto& [j, score] : targets) {
        sql::SqlQuery q;
        q.select = sql::Projection{names[j]};
        q.where = literals;
        scored.emplace_back(score + literal_bonus, std::move(q));
      }
    }

    std::vector<std::pair<double, std::string>> keys;
    for (const auto& [s, q] : scored) keys.emplace_back(s, sql::render(q));
    std::vector<std::size_t> order(scored.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (keys[a].first != keys[b].first) return keys[a].first > keys[b].first;
      return keys[a].second < keys[b].second;
    });
    std::vector<sql::SqlQuery> out;
    out.reserve(order.size());
    for (std::size_t i : order) out.push_back(scored[i].second);
    return out;
  }

  const SynonymTable& synonyms() const { return synonyms_; }

private:
  static std::vector<sql::AggregateFn> triggers(std::string_view q_lower, const std::vector<std::string>& tokens) {
    auto has = [&](std::string_view w) { return std::find(tokens.begin(), tokens.end(), w) != tokens.end(); };
    std::vector<sql::AggregateFn> out;
    if (has("sum") || has("total")) out.push_back(sql::AggregateFn::sum);
    if (has("average") || has("mean")) out.push_back(sql::AggregateFn::avg);
    if (detail::contains_phrase(q_lower, "how many") || has("count")) out.push_back(sql::AggregateFn::count);
    if (has("largest") || has("max")) out.push_back(sql::AggregateFn::max);
    if (has("smallest") || has("min")) out.push_back(sql::AggregateFn::min);
    return out;
  }

  SynonymTable synonyms_;
};

/// Runs the generator and keeps only candidates that validate against the
/// table, in rank order, without duplicates. Rejected candidates are
/// reported through `warnings` when given.
inline std::vector<sql::SqlQuery> generate_query(const QueryGenerator& gen, std::string_view question,
                                                 const Table& table, const Schema* schema,
                                                 std::vector<std::string>* warnings = nullptr) {
  std::vector<sql::SqlQuery> out;
  std::set<std::string> seen;
  for (auto& q : gen.generate(question, table, schema)) {
    std::string rendered = sql::render(q);
    if (auto err = sql::validate(q, table)) {
      if (warnings) warnings->push_back("discarded " + rendered + ": " + *err);
      continue;
    }
    if (!seen.insert(rendered).second) continue;
    out.push_back(std::move(q));
  }
  return out;
}

/// Executes the top-ranked query. H is 1 when execution succeeds with at
/// least one row. No table, no candidate, an execution error, or an empty
/// projection all yield an absent candidate.
inline Candidate structured_answer(const QueryGenerator& gen, std::string_view question, const Context& ctx,
                                   std::vector<std::string>* warnings = nullptr) {
  if (!ctx.table) return Candidate::absent(Modality::sql);
  const Schema* schema = ctx.schema ? &*ctx.schema : nullptr;
  const auto queries = generate_query(gen, question, *ctx.table, schema, warnings);
  if (queries.empty()) return Candidate::absent(Modality::sql);
  const auto& top = queries.front();
  std::string trace = sql::render(top);
  const auto result = sql::execute(top, *ctx.table);
  if (!result.executed_ok) {
    if (warnings) warnings->push_back("execution failed for " + trace + ": " + result.error);
    return Candidate::absent(Modality::sql, std::move(trace));
  }
  std::string answer;
  if (result.scalar) {
    answer = format_answer(*result.scalar);
  } else if (!result.cells.empty() && !result.cells.front().empty()) {
    answer = std::string(text::trim(result.cells.front().front().surface));
  }
  if (answer.empty()) return Candidate::absent(Modality::sql, std::move(trace));
  Candidate c = Candidate::make(Modality::sql, std::move(answer), result.row_count >= 1 ? 1.0 : 0.0);
  c.trace = std::move(trace);
  return c;
}

}  // namespace finmoral
