#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include "finmoral/errors.hpp"

namespace finmoral {

/// Exact rational number with decimal parsing and formatting.
///
/// Every value produced by parsing a decimal literal is exact, so sums and
/// differences of parsed cells compare equal to their printed results
/// (5.6 + 5.0 == 10.6). Division can leave the decimal world (1/3); such
/// values are still exact internally and are only rounded when printed.
class Decimal {
public:
  using Integer = boost::multiprecision::cpp_int;
  using Rational = boost::multiprecision::cpp_rational;

  Decimal() = default;
  explicit Decimal(long long v) : value_(v) {}
  explicit Decimal(Rational r) : value_(std::move(r)) {}

  /// Parses `[+-]digits[.digits][(e|E)[+-]digits]`. Leading "." is accepted
  /// (".5"). Returns nullopt on anything else.
  static std::optional<Decimal> parse(std::string_view s) {
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      negative = s[i] == '-';
      ++i;
    }
    Integer digits = 0;
    int scale = 0;
    bool any_digit = false;
    while (i < s.size() && is_digit(s[i])) {
      digits = digits * 10 + (s[i] - '0');
      any_digit = true;
      ++i;
    }
    if (i < s.size() && s[i] == '.') {
      ++i;
      while (i < s.size() && is_digit(s[i])) {
        digits = digits * 10 + (s[i] - '0');
        ++scale;
        any_digit = true;
        ++i;
      }
    }
    if (!any_digit) return std::nullopt;
    int exponent = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      ++i;
      bool exp_negative = false;
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        exp_negative = s[i] == '-';
        ++i;
      }
      if (i >= s.size() || !is_digit(s[i])) return std::nullopt;
      while (i < s.size() && is_digit(s[i])) {
        exponent = exponent * 10 + (s[i] - '0');
        if (exponent > kMaxExponent) return std::nullopt;
        ++i;
      }
      if (exp_negative) exponent = -exponent;
    }
    if (i != s.size()) return std::nullopt;

    Rational r(digits);
    const int shift = exponent - scale;
    if (shift > 0) r *= Rational(pow10(shift));
    if (shift < 0) r /= Rational(pow10(-shift));
    if (negative) r = -r;
    return Decimal(std::move(r));
  }

  const Rational& rational() const noexcept { return value_; }
  double to_double() const { return value_.convert_to<double>(); }
  bool is_zero() const { return value_.is_zero(); }
  int sign() const { return value_.sign(); }

  /// True when the value has a finite decimal expansion.
  bool is_terminating() const {
    Integer d = boost::multiprecision::denominator(value_);
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    return d == 1;
  }

  /// Shortest exact decimal when terminating; otherwise 12 fractional digits
  /// with trailing zeros removed.
  std::string to_string() const {
    if (!is_terminating()) return trim_fraction(to_fixed(12));
    Integer n = boost::multiprecision::numerator(value_);
    Integer d = boost::multiprecision::denominator(value_);
    int twos = 0;
    int fives = 0;
    Integer rest = d;
    while (rest % 2 == 0) { rest /= 2; ++twos; }
    while (rest % 5 == 0) { rest /= 5; ++fives; }
    const int scale = twos > fives ? twos : fives;
    Integer scaled = n * pow10(scale) / d;
    return trim_fraction(place_point(scaled, scale));
  }

  /// Rounds half away from zero to `places` fractional digits, keeping
  /// trailing zeros ("12.0").
  std::string to_fixed(int places) const {
    Integer n = boost::multiprecision::numerator(value_) * pow10(places);
    Integer d = boost::multiprecision::denominator(value_);
    const bool negative = n < 0;
    if (negative) n = -n;
    Integer q = (2 * n + d) / (2 * d);
    if (negative && q != 0) q = -q;
    return place_point(q, places);
  }

  Decimal operator-() const { return Decimal(Rational(-value_)); }
  friend Decimal operator+(const Decimal& a, const Decimal& b) { return Decimal(Rational(a.value_ + b.value_)); }
  friend Decimal operator-(const Decimal& a, const Decimal& b) { return Decimal(Rational(a.value_ - b.value_)); }
  friend Decimal operator*(const Decimal& a, const Decimal& b) { return Decimal(Rational(a.value_ * b.value_)); }
  friend Decimal operator/(const Decimal& a, const Decimal& b) {
    if (b.is_zero()) throw EvalError("division by zero");
    return Decimal(Rational(a.value_ / b.value_));
  }

  friend bool operator==(const Decimal& a, const Decimal& b) { return a.value_ == b.value_; }
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    if (a.value_ < b.value_) return std::strong_ordering::less;
    if (a.value_ > b.value_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  static Integer pow10(int n) {
    Integer r = 1;
    for (int i = 0; i < n; ++i) r *= 10;
    return r;
  }

private:
  static constexpr int kMaxExponent = 400;

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  static std::string place_point(const Integer& scaled, int places) {
    std::string digits = scaled.str();
    bool negative = false;
    if (!digits.empty() && digits[0] == '-') {
      negative = true;
      digits.erase(0, 1);
    }
    if (places > 0) {
      if (digits.size() <= static_cast<std::size_t>(places)) {
        digits.insert(0, static_cast<std::size_t>(places) - digits.size() + 1, '0');
      }
      digits.insert(digits.size() - static_cast<std::size_t>(places), 1, '.');
    }
    return negative ? "-" + digits : digits;
  }

  static std::string trim_fraction(std::string s) {
    if (s.find('.') == std::string::npos) return s;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
  }

  Rational value_{0};
};

}  // namespace finmoral
