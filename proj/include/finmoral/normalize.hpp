#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "finmoral/text.hpp"
#include "finmoral/value.hpp"

namespace finmoral {

namespace detail {

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : text::trim(s)) {
    if (text::is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

inline std::string strip_quotes(std::string s) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kPairs = {{
      {"\"", "\""},
      {"'", "'"},
      {"\xE2\x80\x9C", "\xE2\x80\x9D"},
      {"\xE2\x80\x98", "\xE2\x80\x99"},
  }};
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && text::starts_with(s, open) &&
        std::string_view(s).substr(s.size() - close.size()) == close) {
      return std::string(text::trim(std::string_view(s).substr(open.size(), s.size() - open.size() - close.size())));
    }
  }
  return s;
}

inline std::string strip_currency(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '$') continue;
    if (s.substr(i, 3) == "\xE2\x82\xAC") { i += 2; continue; }
    if (s.substr(i, 2) == "\xC2\xA3" || s.substr(i, 2) == "\xC2\xA5") { i += 1; continue; }
    out.push_back(s[i]);
  }
  return out;
}

inline std::string drop_articles(const std::string& s) {
  if (s.find(' ') == std::string::npos) return s;
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = s.find(' ', i);
    if (j == std::string::npos) j = s.size();
    const std::string_view word(s.data() + i, j - i);
    if (word != "a" && word != "an" && word != "the") {
      if (!out.empty()) out.push_back(' ');
      out.append(word);
    }
    i = j + 1;
  }
  return out.empty() ? s : out;
}

inline std::string normalize_step(std::string_view raw) {
  std::string s = text::lower(text::trim(raw));
  s = strip_quotes(std::move(s));
  std::size_t plus = 0;
  while (plus < s.size() && (s[plus] == '+' || text::is_space(s[plus]))) ++plus;
  s.erase(0, plus);
  while (!s.empty() && (s.back() == '.' || text::is_space(s.back()))) s.pop_back();
  s = collapse_whitespace(strip_currency(s));
  if (auto n = parse_number(s)) {
    if (n->percent) return (n->value * Decimal(100)).to_string() + "%";
    return n->value.to_string();
  }
  return drop_articles(s);
}

}  // namespace detail

/// Canonical answer form used for voting, consistency and exact match.
///
/// Lowercases, trims, strips a leading "+", surrounding quotes, trailing
/// periods and currency symbols, and collapses whitespace. Numbers become
/// their shortest exact decimal after unit expansion ("$1.4B" ->
/// "1400000000"), percents the same with "%" ("+12.0%" -> "12%"). Multi-word
/// text loses the articles a/an/the. Steps repeat until stable, so the
/// result is a fixed point.
inline std::string normalize_answer(std::string_view answer) {
  std::string current = detail::normalize_step(answer);
  for (int i = 0; i < 16; ++i) {
    std::string next = detail::normalize_step(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

}  // namespace finmoral
