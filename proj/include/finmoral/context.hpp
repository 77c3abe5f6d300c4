#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finmoral/table.hpp"
#include "finmoral/value.hpp"

namespace finmoral {

enum class Source { passage, table, question, rationale };

/// Where a number came from: a byte span for free text, a cell for tables.
struct Provenance {
  Source source = Source::passage;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t row = 0;
  std::size_t column = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct NumberMention {
  Value value;
  Provenance where;

  friend bool operator==(const NumberMention&, const NumberMention&) = default;
};

struct Context {
  std::optional<Table> table;
  std::optional<std::string> passage;
  std::vector<NumberMention> numbers;
  std::optional<Schema> schema;

  bool valid() const { return table.has_value() || passage.has_value(); }
};

namespace detail {

inline std::size_t currency_prefix_length(std::string_view s, std::size_t pos) {
  if (pos >= 1 && s[pos - 1] == '$') return 1;
  if (pos >= 3 && s.substr(pos - 3, 3) == "\xE2\x82\xAC") return 3;
  if (pos >= 2 && (s.substr(pos - 2, 2) == "\xC2\xA3" || s.substr(pos - 2, 2) == "\xC2\xA5")) return 2;
  return 0;
}

inline bool sign_context(std::string_view s, std::size_t sign_pos) {
  if (sign_pos == 0) return true;
  const char p = s[sign_pos - 1];
  return text::is_space(p) || p == '(' || p == ':' || p == '=' || p == '[';
}

inline std::size_t sign_prefix_length(std::string_view s, std::size_t pos) {
  if (pos >= 1 && (s[pos - 1] == '-' || s[pos - 1] == '+') && sign_context(s, pos - 1)) return 1;
  if (pos >= 3 && s.substr(pos - 3, 3) == "\xE2\x88\x92" && sign_context(s, pos - 3)) return 3;
  return 0;
}

inline bool is_unit_letter(char c) {
  return c == 'K' || c == 'k' || c == 'M' || c == 'm' || c == 'B' || c == 'b';
}

}  // namespace detail

/// Finds numeric tokens in free text, in order. A token is an optional sign
/// and currency symbol, digits with optional thousands grouping and
/// fraction, then an optional K/M/B unit or "%". Digits glued to letters
/// ("Q4", "FY2022", "5th") are not numbers.
inline std::vector<NumberMention> scan_numbers(std::string_view s, Source source) {
  std::vector<NumberMention> out;
  const std::size_t n = s.size();
  std::size_t i = 0;
  auto skip_word = [&] {
    while (i < n && (text::is_word_byte(s[i]) || s[i] == '.' || s[i] == ',')) {
      if ((s[i] == '.' || s[i] == ',') && !(i + 1 < n && text::is_word_byte(s[i + 1]))) break;
      ++i;
    }
  };
  while (i < n) {
    if (!text::is_digit(s[i])) {
      ++i;
      continue;
    }
    if (i > 0 && (text::is_word_byte(s[i - 1]) || ((s[i - 1] == '.' || s[i - 1] == ',') && i >= 2 && text::is_digit(s[i - 2])))) {
      skip_word();
      continue;
    }
    const std::size_t start = i;
    std::size_t j = i;
    while (j < n && text::is_digit(s[j])) ++j;
    while (j + 3 < n && s[j] == ',' && text::is_digit(s[j + 1]) && text::is_digit(s[j + 2]) &&
           text::is_digit(s[j + 3]) && (j + 4 >= n || !text::is_digit(s[j + 4]))) {
      j += 4;
    }
    if (j + 1 < n && s[j] == '.' && text::is_digit(s[j + 1])) {
      ++j;
      while (j < n && text::is_digit(s[j])) ++j;
    }
    if (j < n && s[j] == '%') {
      ++j;
    } else if (j < n && detail::is_unit_letter(s[j]) && (j + 1 >= n || !text::is_word_byte(s[j + 1]))) {
      ++j;
    }
    if (j < n && text::is_word_byte(s[j])) {
      skip_word();
      continue;
    }
    std::size_t b = start;
    b -= detail::currency_prefix_length(s, b);
    b -= detail::sign_prefix_length(s, b);
    Value v = parse_value(s.substr(b, j - b));
    if (v.is_number()) {
      Provenance p;
      p.source = source;
      p.begin = b;
      p.end = j;
      out.push_back(NumberMention{std::move(v), p});
    }
    i = j;
  }
  return out;
}

/// All numeric values in the passage (document order) followed by numeric
/// table cells (row-major). The question is not a number source.
inline std::vector<NumberMention> extract_numbers(std::string_view /*question*/, const Context& ctx) {
  std::vector<NumberMention> out;
  if (ctx.passage) out = scan_numbers(*ctx.passage, Source::passage);
  if (ctx.table) {
    const Table& t = *ctx.table;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (std::size_t j = 0; j < t.rows[i].size(); ++j) {
        const Value& v = t.rows[i][j];
        if (!v.is_number()) continue;
        Provenance p;
        p.source = Source::table;
        p.end = v.surface.size();
        p.row = i;
        p.column = j;
        out.push_back(NumberMention{v, p});
      }
    }
  }
  return out;
}

/// Assembles a full context: schema derived from the table, numbers
/// extracted from passage and table. A blank passage counts as absent.
inline Context make_context(std::optional<Table> table, std::optional<std::string> passage,
                            std::string_view question = {}) {
  Context ctx;
  ctx.table = std::move(table);
  if (passage && !text::trim(*passage).empty()) ctx.passage = std::move(passage);
  if (ctx.table) ctx.schema = Schema::of(*ctx.table);
  ctx.numbers = extract_numbers(question, ctx);
  return ctx;
}

}  // namespace finmoral
