#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace finkg {

/// Exact base-10 number: coefficient * 10^-scale.
///
/// Values are kept normalized (no trailing fractional zeros, zero has scale 0),
/// so structural equality is numeric equality and `to_string` is canonical:
/// "5829", "-12.5", "0.2". Coefficients are 128-bit; parsing rejects anything
/// that would not fit.
class Decimal {
 public:
  Decimal() = default;
  Decimal(std::int64_t integer);  // NOLINT(google-explicit-constructor)

  /// Plain decimal notation: optional sign, digits, optional fraction.
  /// No grouping separators, no exponent.
  static std::optional<Decimal> parse(std::string_view text);

  /// Nearest decimal with at most 15 significant digits, which is how FinQA
  /// stores executed answers.
  static Decimal from_double(double value);

  std::string to_string() const;
  double to_double() const;

  bool is_negative() const { return coefficient_ < 0; }
  bool is_zero() const { return coefficient_ == 0; }
  Decimal abs() const;
  Decimal negated() const;
  int scale() const { return scale_; }

  /// Multiplies by 10^exponent (exponent may be negative). Exact.
  Decimal shifted(int exponent) const;

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

 private:
  Decimal(__int128 coefficient, int scale);
  void normalize();

  __int128 coefficient_ = 0;
  int scale_ = 0;
};

}  // namespace finkg
