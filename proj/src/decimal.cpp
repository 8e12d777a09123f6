#include "finkg/decimal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace finkg {
namespace {

constexpr int kMaxScale = 36;
constexpr __int128 kMaxCoefficient =
    (static_cast<__int128>(1) << 120);  // well inside int128 range

bool mul10(__int128& v) {
  if (v > kMaxCoefficient / 10 || v < -kMaxCoefficient / 10) return false;
  v *= 10;
  return true;
}

}  // namespace

Decimal::Decimal(std::int64_t integer) : coefficient_(integer), scale_(0) {}

Decimal::Decimal(__int128 coefficient, int scale)
    : coefficient_(coefficient), scale_(scale) {
  normalize();
}

void Decimal::normalize() {
  if (coefficient_ == 0) {
    scale_ = 0;
    return;
  }
  while (scale_ > 0 && coefficient_ % 10 == 0) {
    coefficient_ /= 10;
    --scale_;
  }
  while (scale_ < 0) {
    mul10(coefficient_);
    ++scale_;
  }
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  __int128 coefficient = 0;
  int scale = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.') {
      if (seen_point) return std::nullopt;
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') return std::nullopt;
    seen_digit = true;
    if (!mul10(coefficient)) return std::nullopt;
    coefficient += c - '0';
    if (seen_point) {
      if (++scale > kMaxScale) return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  return Decimal(negative ? -coefficient : coefficient, scale);
}

Decimal Decimal::from_double(double value) {
  if (!std::isfinite(value)) return Decimal();
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.15g", value);
  std::string_view text(buffer);
  // %.15g may produce an exponent; expand it by hand.
  const auto e = text.find('e');
  if (e == std::string_view::npos) return parse(text).value_or(Decimal());
  auto mantissa = parse(text.substr(0, e)).value_or(Decimal());
  const int exponent = std::stoi(std::string(text.substr(e + 1)));
  return mantissa.shifted(exponent);
}

std::string Decimal::to_string() const {
  __int128 magnitude = coefficient_ < 0 ? -coefficient_ : coefficient_;
  std::string digits;
  do {
    digits.push_back(static_cast<char>('0' + static_cast<int>(magnitude % 10)));
    magnitude /= 10;
  } while (magnitude > 0);
  while (static_cast<int>(digits.size()) <= scale_) digits.push_back('0');
  std::reverse(digits.begin(), digits.end());
  if (scale_ > 0) digits.insert(digits.size() - scale_, 1, '.');
  if (coefficient_ < 0) digits.insert(digits.begin(), '-');
  return digits;
}

double Decimal::to_double() const {
  // Round-trip through text so the result is the correctly rounded double.
  return std::strtod(to_string().c_str(), nullptr);
}

Decimal Decimal::abs() const { return Decimal(coefficient_ < 0 ? -coefficient_ : coefficient_, scale_); }

Decimal Decimal::negated() const { return Decimal(-coefficient_, scale_); }

Decimal Decimal::shifted(int exponent) const {
  Decimal out = *this;
  if (exponent >= 0) {
    for (int k = 0; k < exponent; ++k) {
      if (out.scale_ > 0) {
        --out.scale_;
      } else {
        mul10(out.coefficient_);
      }
    }
  } else {
    out.scale_ += -exponent;
  }
  out.normalize();
  return out;
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  __int128 ca = a.coefficient_;
  __int128 cb = b.coefficient_;
  int sa = a.scale_;
  int sb = b.scale_;
  while (sa < sb) {
    if (!mul10(ca)) return a.to_double() < b.to_double() ? std::strong_ordering::less : std::strong_ordering::greater;
    ++sa;
  }
  while (sb < sa) {
    if (!mul10(cb)) return a.to_double() < b.to_double() ? std::strong_ordering::less : std::strong_ordering::greater;
    ++sb;
  }
  if (ca < cb) return std::strong_ordering::less;
  if (ca > cb) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace finkg
