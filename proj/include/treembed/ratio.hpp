#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace treembed {

// Exact non-negative rational used for the fractional parameters (beta, gamma,
// psi, xi) so that every threshold comparison is done in integers.
class Ratio {
 public:
  constexpr Ratio() = default;
  constexpr Ratio(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw std::invalid_argument("zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const auto g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  // Accepts "p/q", an integer, or a finite decimal such as "0.045".
  static Ratio parse(const std::string& text) {
    const auto slash = text.find('/');
    if (slash != std::string::npos)
      return {std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1))};
    const auto dot = text.find('.');
    if (dot == std::string::npos) return {std::stoll(text), 1};
    const std::string frac = text.substr(dot + 1);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::string whole = text.substr(0, dot);
    const std::int64_t w = whole.empty() || whole == "-" ? 0 : std::stoll(whole);
    const std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
    const bool negative = !text.empty() && text[0] == '-';
    return {(negative ? -1 : 1) * ((w < 0 ? -w : w) * den + f), den};
  }

  constexpr std::int64_t num() const { return num_; }
  constexpr std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  Ratio operator*(Ratio o) const { return {num_ * o.num_, den_ * o.den_}; }
  Ratio operator+(Ratio o) const { return {num_ * o.den_ + o.num_ * den_, den_ * o.den_}; }
  Ratio operator-(Ratio o) const { return {num_ * o.den_ - o.num_ * den_, den_ * o.den_}; }
  Ratio operator/(Ratio o) const { return {num_ * o.den_, den_ * o.num_}; }
  Ratio inverse() const { return {den_, num_}; }

  friend bool operator==(Ratio a, Ratio b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend std::strong_ordering operator<=>(Ratio a, Ratio b) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l < r ? std::strong_ordering::less
                 : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  // floor and ceil of this * k
  std::int64_t floor_times(std::int64_t k) const { return floor_div(num_ * k, den_); }
  std::int64_t ceil_times(std::int64_t k) const { return -floor_div(-num_ * k, den_); }

 private:
  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Compares an integer count against ratio * k exactly.
inline bool at_most(std::int64_t count, Ratio r, std::int64_t k = 1) {
  return static_cast<__int128>(count) * r.den() <= static_cast<__int128>(r.num()) * k;
}
inline bool less_than(std::int64_t count, Ratio r, std::int64_t k = 1) {
  return static_cast<__int128>(count) * r.den() < static_cast<__int128>(r.num()) * k;
}
inline bool at_least(std::int64_t count, Ratio r, std::int64_t k = 1) {
  return !less_than(count, r, k);
}

}  // namespace treembed
