#pragma once

#include <map>
#include <string>
#include <tuple>

#include "vpdiff/index.hpp"
#include "vpdiff/rational.hpp"

namespace vpd {

// Symbolic constant alphabet. MomentVol only appears in intermediate inner-trace
// reductions and must be absent from any final result.
enum class SymConst { Omega4, InvEps, Lambda, Omega1L, Coupling, Xi, MomentVol };

inline const char* symName(SymConst c) {
  switch (c) {
    case SymConst::Omega4: return "Omega4";
    case SymConst::InvEps: return "epsinv";
    case SymConst::Lambda: return "Lambda";
    case SymConst::Omega1L: return "Omega1L";
    case SymConst::Coupling: return "g";
    case SymConst::Xi: return "xi";
    case SymConst::MomentVol: return "vol";
  }
  return "?";
}

// Squared momentum k_tag^2 (spacetime) or K_tag^2 (inner); `ieps` marks the
// propagator denominator carrying the -i*eps prescription as an inert tag.
struct MomSq {
  bool inner = false;
  int tag = 0;
  bool ieps = false;
  bool operator<(const MomSq& o) const {
    return std::tie(inner, tag, ieps) < std::tie(o.inner, o.tag, o.ieps);
  }
  bool operator==(const MomSq& o) const {
    return inner == o.inner && tag == o.tag && ieps == o.ieps;
  }
};

// rational * i^iPow * prod(const^n) * prod(momsq^n), with i^2 folded into the sign.
struct ScalarCoeff {
  Rational rat;
  int iPow = 0; // 0 or 1
  std::map<SymConst, int> pows;
  std::map<MomSq, int> momsq;

  ScalarCoeff() : rat(0) {}
  explicit ScalarCoeff(Rational r) : rat(std::move(r)) {}
  ScalarCoeff(long long n, long long d) : rat(n, d) {}

  static ScalarCoeff one() { return ScalarCoeff(Rational(1)); }
  static ScalarCoeff imaginary() {
    ScalarCoeff c(Rational(1));
    c.iPow = 1;
    return c;
  }

  bool isZero() const { return rat.isZero(); }

  ScalarCoeff& mulConst(SymConst s, int n) {
    if (n != 0) {
      pows[s] += n;
      if (pows[s] == 0) pows.erase(s);
    }
    return *this;
  }
  ScalarCoeff& mulMomSq(const MomSq& m, int n) {
    if (n != 0) {
      momsq[m] += n;
      if (momsq[m] == 0) momsq.erase(m);
    }
    return *this;
  }
  ScalarCoeff& mulI(int n) {
    n = ((n % 4) + 4) % 4;
    if (n >= 2) {
      rat = -rat;
      n -= 2;
    }
    iPow += n;
    if (iPow >= 2) {
      rat = -rat;
      iPow -= 2;
    }
    return *this;
  }

  ScalarCoeff operator*(const ScalarCoeff& o) const {
    ScalarCoeff r(rat * o.rat);
    r.iPow = iPow;
    r.pows = pows;
    r.momsq = momsq;
    r.mulI(o.iPow);
    for (auto& [k, v] : o.pows) r.mulConst(k, v);
    for (auto& [k, v] : o.momsq) r.mulMomSq(k, v);
    return r;
  }

  ScalarCoeff operator-() const {
    ScalarCoeff r = *this;
    r.rat = -r.rat;
    return r;
  }

  // Symbolic part only (everything but the rational): monomials with identical
  // symbol keys merge by rational addition.
  std::string symbolKey() const {
    std::string k;
    if (iPow) k += "i ";
    for (auto& [c, n] : pows) k += std::string(symName(c)) + "^" + std::to_string(n) + " ";
    for (auto& [m, n] : momsq) {
      k += std::string(m.inner ? "Ksq" : "ksq") + std::to_string(m.tag) + (m.ieps ? "e" : "") +
           "^" + std::to_string(n) + " ";
    }
    return k;
  }

  bool sameSymbols(const ScalarCoeff& o) const {
    return iPow == o.iPow && pows == o.pows && momsq == o.momsq;
  }
};

} // namespace vpd
