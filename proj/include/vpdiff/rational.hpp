#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace vpd {

struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using i128 = __int128;

inline i128 checked_mul(i128 a, i128 b) {
  if (a == 0 || b == 0) return 0;
  i128 r = a * b;
  if (r / b != a) throw OverflowError("rational multiply overflow");
  return r;
}

inline i128 checked_add(i128 a, i128 b) {
  i128 r = a + b;
  if ((b > 0 && r < a) || (b < 0 && r > a)) throw OverflowError("rational add overflow");
  return r;
}

inline i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline std::string to_string_i128(i128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  std::string s;
  while (v != 0) {
    int d = static_cast<int>(neg ? -(v % 10) : (v % 10));
    s.push_back(static_cast<char>('0' + d));
    v /= 10;
  }
  if (neg) s.push_back('-');
  return {s.rbegin(), s.rend()};
}

} // namespace detail

// Exact rational, always in lowest terms with positive denominator.
class Rational {
public:
  Rational() : num_(0), den_(1) {}
  Rational(long long n) : num_(n), den_(1) {}
  Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

  static Rational fromParts(detail::i128 n, detail::i128 d) {
    Rational r;
    r.num_ = n;
    r.den_ = d;
    r.normalize();
    return r;
  }

  bool isZero() const { return num_ == 0; }
  bool isOne() const { return num_ == 1 && den_ == 1; }
  int sign() const { return num_ == 0 ? 0 : (num_ < 0 ? -1 : 1); }

  Rational operator-() const { return fromParts(-num_, den_); }

  Rational operator+(const Rational& o) const {
    using namespace detail;
    i128 g = gcd128(den_, o.den_);
    i128 l = checked_mul(den_ / g, o.den_);
    i128 n = checked_add(checked_mul(num_, o.den_ / g), checked_mul(o.num_, den_ / g));
    return fromParts(n, l);
  }
  Rational operator-(const Rational& o) const { return *this + (-o); }
  Rational operator*(const Rational& o) const {
    using namespace detail;
    i128 g1 = gcd128(num_, o.den_);
    i128 g2 = gcd128(o.num_, den_);
    return fromParts(checked_mul(num_ / g1, o.num_ / g2),
                     checked_mul(den_ / g2, o.den_ / g1));
  }
  Rational operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::domain_error("rational division by zero");
    return *this * fromParts(o.den_, o.num_);
  }

  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const {
    return detail::checked_mul(num_, o.den_) < detail::checked_mul(o.num_, den_);
  }

  double toDouble() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  std::string str() const {
    if (den_ == 1) return detail::to_string_i128(num_);
    return detail::to_string_i128(num_) + "/" + detail::to_string_i128(den_);
  }

  // Parses "n" or "n/d".
  static Rational parse(const std::string& s) {
    auto slash = s.find('/');
    auto toInt = [](const std::string& t) -> detail::i128 {
      detail::i128 v = 0;
      bool neg = false;
      size_t i = 0;
      if (i < t.size() && (t[i] == '-' || t[i] == '+')) {
        neg = t[i] == '-';
        ++i;
      }
      if (i == t.size()) throw std::invalid_argument("bad rational: " + t);
      for (; i < t.size(); ++i) {
        if (t[i] < '0' || t[i] > '9') throw std::invalid_argument("bad rational: " + t);
        v = detail::checked_add(detail::checked_mul(v, 10), t[i] - '0');
      }
      return neg ? -v : v;
    };
    if (slash == std::string::npos) return fromParts(toInt(s), 1);
    return fromParts(toInt(s.substr(0, slash)), toInt(s.substr(slash + 1)));
  }

  static Rational factorial(int n) {
    Rational r(1);
    for (int i = 2; i <= n; ++i) r *= Rational(i);
    return r;
  }

private:
  void normalize() {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    detail::i128 g = detail::gcd128(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  detail::i128 num_;
  detail::i128 den_;
};

} // namespace vpd
