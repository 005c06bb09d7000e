#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace toolrl {

/// Exact currency amount stored as integer cents. Monetary values are
/// never held as binary floats; the canonical rendering is a fixed
/// two-fraction-digit decimal string ("49.95", "-20.05").
class Money {
 public:
  constexpr Money() = default;

  static Money from_cents(std::int64_t cents) {
    Money m;
    m.cents_ = cents;
    return m;
  }

  /// Parses a decimal string with at most two fraction digits.
  static Money parse(const std::string& text) {
    std::string s = text;
    bool negative = false;
    std::size_t pos = 0;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      negative = s[pos] == '-';
      ++pos;
    }
    std::int64_t whole = 0, frac = 0;
    std::size_t digits = 0;
    for (; pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])); ++pos, ++digits) {
      if (whole > (INT64_MAX - 9) / 10 / 100)
        throw std::invalid_argument("Money: amount out of range: '" + text + "'");
      whole = whole * 10 + (s[pos] - '0');
    }
    if (digits == 0) throw std::invalid_argument("Money: not a decimal: '" + text + "'");
    if (pos < s.size()) {
      if (s[pos] != '.') throw std::invalid_argument("Money: not a decimal: '" + text + "'");
      ++pos;
      std::size_t frac_digits = 0;
      for (; pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])); ++pos)
        if (frac_digits < 2) {
          frac = frac * 10 + (s[pos] - '0');
          ++frac_digits;
        } else if (s[pos] != '0') {
          throw std::invalid_argument("Money: more than two fraction digits: '" + text + "'");
        }
      if (frac_digits == 1) frac *= 10;
      if (pos != s.size()) throw std::invalid_argument("Money: not a decimal: '" + text + "'");
    }
    std::int64_t cents = whole * 100 + frac;
    return from_cents(negative ? -cents : cents);
  }

  /// Accepts either a JSON string ("49.95") or a JSON number. Numbers are
  /// rounded to the nearest cent and must already be cent-aligned.
  static Money from_json(const nlohmann::json& v) {
    if (v.is_string()) return parse(v.get<std::string>());
    if (v.is_number()) {
      const double d = v.get<double>() * 100.0;
      const double r = std::round(d);
      if (std::fabs(d - r) > 1e-6)
        throw std::invalid_argument("Money: number is not cent-aligned");
      return from_cents(static_cast<std::int64_t>(r));
    }
    throw std::invalid_argument("Money: expected string or number");
  }

  std::int64_t cents() const { return cents_; }

  /// Canonical fixed-precision rendering, two fraction digits.
  std::string str() const {
    const std::int64_t abs = cents_ < 0 ? -cents_ : cents_;
    std::string s = std::to_string(abs / 100) + ".";
    const std::int64_t frac = abs % 100;
    if (frac < 10) s += "0";
    s += std::to_string(frac);
    return cents_ < 0 ? "-" + s : s;
  }

  friend Money operator+(Money a, Money b) { return from_cents(a.cents_ + b.cents_); }
  friend Money operator-(Money a, Money b) { return from_cents(a.cents_ - b.cents_); }
  Money operator-() const { return from_cents(-cents_); }
  friend bool operator==(Money a, Money b) { return a.cents_ == b.cents_; }
  friend bool operator!=(Money a, Money b) { return a.cents_ != b.cents_; }
  friend bool operator<(Money a, Money b) { return a.cents_ < b.cents_; }
  friend bool operator>=(Money a, Money b) { return a.cents_ >= b.cents_; }

 private:
  std::int64_t cents_ = 0;
};

}  // namespace toolrl
