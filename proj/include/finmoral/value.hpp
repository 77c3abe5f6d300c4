#pragma once

#include <array>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finmoral/decimal.hpp"
#include "finmoral/text.hpp"

namespace finmoral {

enum class ValueKind { number, text, date };

inline std::string_view to_string(ValueKind k) {
  switch (k) {
    case ValueKind::number: return "number";
    case ValueKind::text: return "text";
    case ValueKind::date: return "date";
  }
  return "text";
}

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  std::string iso() const {
    std::array<char, 16> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02d", year, month, day);
    return buf.data();
  }

  friend auto operator<=>(const Date&, const Date&) = default;
};

/// A typed table cell or extracted quantity.
///
/// `surface` always holds the text the value was parsed from, verbatim, so
/// tables serialize back to the bytes they were loaded from. Equality is
/// semantic: numbers compare by exact magnitude and percent flag, dates by
/// day, text by trimmed surface.
struct Value {
  ValueKind kind = ValueKind::text;
  Decimal number;
  bool percent = false;
  Date date;
  std::string surface;

  bool is_number() const { return kind == ValueKind::number; }
  bool is_date() const { return kind == ValueKind::date; }
  bool is_text() const { return kind == ValueKind::text; }

  static Value of_text(std::string s) {
    Value v;
    v.surface = std::move(s);
    return v;
  }
  static Value of_number(Decimal n, bool percent = false);
  static Value of_date(Date d) {
    Value v;
    v.kind = ValueKind::date;
    v.date = d;
    v.surface = d.iso();
    return v;
  }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case ValueKind::number: return a.number == b.number && a.percent == b.percent;
      case ValueKind::date: return a.date == b.date;
      case ValueKind::text: return text::trim(a.surface) == text::trim(b.surface);
    }
    return false;
  }
};

namespace detail {

struct ParsedNumber {
  Decimal value;
  bool percent = false;
};

inline bool consume(std::string_view& s, std::string_view prefix) {
  if (!text::starts_with(s, prefix)) return false;
  s.remove_prefix(prefix.size());
  return true;
}

inline bool consume_currency(std::string_view& s) {
  static constexpr std::array<std::string_view, 4> kSymbols = {"$", "\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"};
  for (auto sym : kSymbols) {
    if (consume(s, sym)) return true;
  }
  return false;
}

/// 0 = no sign, +1 / -1 otherwise. Accepts ASCII +/- and U+2212.
inline int consume_sign(std::string_view& s) {
  if (consume(s, "+")) return 1;
  if (consume(s, "-") || consume(s, "\xE2\x88\x92")) return -1;
  return 0;
}

/// Validates thousands grouping ("1,234,567") and strips the commas.
inline std::optional<std::string> strip_grouping(std::string_view body) {
  const auto dot = body.find_first_of(".eE");
  const std::string_view int_part = body.substr(0, dot);
  if (int_part.find(',') == std::string_view::npos) return std::string(body);
  std::size_t first = int_part.find(',');
  if (first == 0 || first > 3) return std::nullopt;
  std::string out(int_part.substr(0, first));
  std::size_t i = first;
  while (i < int_part.size()) {
    if (int_part[i] != ',' || i + 4 > int_part.size()) return std::nullopt;
    for (std::size_t j = i + 1; j < i + 4; ++j) {
      if (!text::is_digit(int_part[j])) return std::nullopt;
      out.push_back(int_part[j]);
    }
    i += 4;
  }
  if (dot != std::string_view::npos) out.append(body.substr(dot));
  return out;
}

inline std::optional<ParsedNumber> parse_number(std::string_view s) {
  bool accounting_negative = false;
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
    accounting_negative = true;
    s = text::trim(s.substr(1, s.size() - 2));
  }
  int sign = consume_sign(s);
  const bool had_currency = consume_currency(s);
  if (had_currency && sign == 0) sign = consume_sign(s);
  if (s.empty()) return std::nullopt;

  ParsedNumber out;
  Decimal::Integer multiplier = 1;
  const char last = s.back();
  if (last == '%') {
    out.percent = true;
    s.remove_suffix(1);
  } else if (last == 'K' || last == 'k') {
    multiplier = 1000;
    s.remove_suffix(1);
  } else if (last == 'M' || last == 'm') {
    multiplier = 1000000;
    s.remove_suffix(1);
  } else if (last == 'B' || last == 'b') {
    multiplier = 1000000000;
    s.remove_suffix(1);
  }
  if (s.empty() || !(text::is_digit(s.front()) || s.front() == '.')) return std::nullopt;
  auto body = strip_grouping(s);
  if (!body) return std::nullopt;
  auto value = Decimal::parse(*body);
  if (!value) return std::nullopt;
  Decimal v = *value * Decimal(Decimal::Rational(multiplier));
  if (out.percent) v = v / Decimal(100);
  if (sign < 0) v = -v;
  if (accounting_negative) v = -v;
  out.value = v;
  return out;
}

inline int month_from_name(std::string_view name) {
  static constexpr std::array<std::string_view, 12> kFull = {
      "january", "february", "march", "april", "may", "june",
      "july", "august", "september", "october", "november", "december"};
  std::string lowered = text::lower(name);
  if (!lowered.empty() && lowered.back() == '.') lowered.pop_back();
  if (lowered == "sept") return 9;
  for (std::size_t i = 0; i < kFull.size(); ++i) {
    if (lowered == kFull[i]) return static_cast<int>(i) + 1;
    if (lowered.size() == 3 && kFull[i].substr(0, 3) == lowered) return static_cast<int>(i) + 1;
  }
  return 0;
}

inline int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2) {
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29 : 28;
  }
  return kDays[static_cast<std::size_t>(month - 1)];
}

inline std::optional<int> parse_uint(std::string_view s, std::size_t min_len, std::size_t max_len) {
  if (s.size() < min_len || s.size() > max_len) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (!text::is_digit(c)) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

inline std::optional<Date> make_date(int y, int m, int d) {
  if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return std::nullopt;
  return Date{y, m, d};
}

inline std::optional<Date> parse_date(std::string_view s) {
  // ISO: YYYY-MM-DD or YYYY-MM
  if (s.size() >= 7 && s[4] == '-') {
    auto y = parse_uint(s.substr(0, 4), 4, 4);
    if (s.size() == 7) {
      auto m = parse_uint(s.substr(5, 2), 2, 2);
      if (y && m) return make_date(*y, *m, 1);
      return std::nullopt;
    }
    if (s.size() == 10 && s[7] == '-') {
      auto m = parse_uint(s.substr(5, 2), 2, 2);
      auto d = parse_uint(s.substr(8, 2), 2, 2);
      if (y && m && d) return make_date(*y, *m, *d);
    }
    return std::nullopt;
  }
  // Month-name forms: "Mar 2023", "March 15, 2023", "15 Mar 2023"
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (text::is_space(s[i]) || s[i] == ',')) ++i;
    const std::size_t b = i;
    while (i < s.size() && !text::is_space(s[i]) && s[i] != ',') ++i;
    if (i > b) parts.push_back(s.substr(b, i - b));
  }
  if (parts.size() == 2) {
    const int m = month_from_name(parts[0]);
    auto y = parse_uint(parts[1], 4, 4);
    if (m && y) return make_date(*y, m, 1);
  } else if (parts.size() == 3) {
    if (int m = month_from_name(parts[0])) {
      auto d = parse_uint(parts[1], 1, 2);
      auto y = parse_uint(parts[2], 4, 4);
      if (d && y) return make_date(*y, m, *d);
    } else if (int m2 = month_from_name(parts[1])) {
      auto d = parse_uint(parts[0], 1, 2);
      auto y = parse_uint(parts[2], 4, 4);
      if (d && y) return make_date(*y, m2, *d);
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Lossless rendering: parse_value(to_string(v)) == v for every number or
/// date Value with a terminating decimal magnitude.
inline std::string to_string(const Value& v) {
  switch (v.kind) {
    case ValueKind::number:
      if (v.percent) return (v.number * Decimal(100)).to_string() + "%";
      return v.number.to_string();
    case ValueKind::date: return v.date.iso();
    case ValueKind::text: return std::string(text::trim(v.surface));
  }
  return v.surface;
}

inline Value Value::of_number(Decimal n, bool pct) {
  Value v;
  v.kind = ValueKind::number;
  v.number = std::move(n);
  v.percent = pct;
  v.surface = to_string(v);
  return v;
}

/// Total parse of a cell or token. Units: K/M/B multiply, "%" divides by 100
/// and sets the percent flag, leading currency symbols are dropped. Dates
/// without a day resolve to the 1st. Anything else is text.
inline Value parse_value(std::string_view raw) {
  const std::string_view s = text::trim(raw);
  Value v = Value::of_text(std::string(raw));
  if (s.empty()) return v;
  if (auto n = detail::parse_number(s)) {
    v.kind = ValueKind::number;
    v.number = n->value;
    v.percent = n->percent;
    return v;
  }
  if (auto d = detail::parse_date(s)) {
    v.kind = ValueKind::date;
    v.date = *d;
  }
  return v;
}

/// Answer rendering: percents with one decimal ("12.0%"), plain numbers with
/// the fewest decimals that represent them exactly (six places when the
/// expansion does not terminate). No "+" sign is ever emitted.
inline std::string format_answer(const Value& v) {
  switch (v.kind) {
    case ValueKind::number: {
      if (v.percent) return (v.number * Decimal(100)).to_fixed(1) + "%";
      if (v.number.is_terminating()) return v.number.to_string();
      std::string s = v.number.to_fixed(6);
      while (s.back() == '0') s.pop_back();
      if (s.back() == '.') s.pop_back();
      if (s == "-0") s = "0";
      return s;
    }
    case ValueKind::date: return v.date.iso();
    case ValueKind::text: return std::string(text::trim(v.surface));
  }
  return {};
}

}  // namespace finmoral
