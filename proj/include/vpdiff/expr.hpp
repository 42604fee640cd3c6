#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vpdiff/scalar_coeff.hpp"
#include "vpdiff/symbol.hpp"

namespace vpd {

struct TensorMonomial {
  ScalarCoeff coeff;
  std::vector<FieldSymbol> factors;

  TensorMonomial() = default;
  TensorMonomial(ScalarCoeff c, std::vector<FieldSymbol> f)
      : coeff(std::move(c)), factors(std::move(f)) {}
};

// Sum of monomials. Kept in canonical form by canonicalize(): deterministic
// factor order, canonical dummy labels, merged like terms, Grassmann signs
// normalized. Equality of canonical forms decides expression equality.
struct TensorExpr {
  std::vector<TensorMonomial> terms;

  static TensorExpr zero() { return {}; }
  static TensorExpr scalar(ScalarCoeff c) {
    TensorExpr e;
    if (!c.isZero()) e.terms.emplace_back(std::move(c), std::vector<FieldSymbol>{});
    return e;
  }
  static TensorExpr scalar(Rational r) { return scalar(ScalarCoeff(std::move(r))); }
  static TensorExpr fromMonomial(TensorMonomial m) {
    TensorExpr e;
    e.terms.push_back(std::move(m));
    return e;
  }
  static TensorExpr fromFactors(std::vector<FieldSymbol> fs, ScalarCoeff c = ScalarCoeff::one()) {
    return fromMonomial(TensorMonomial(std::move(c), std::move(fs)));
  }

  bool isZero() const { return terms.empty(); }
};

// core operations
TensorExpr canonicalize(const TensorExpr& e);
TensorExpr add(const TensorExpr& a, const TensorExpr& b);
TensorExpr sub(const TensorExpr& a, const TensorExpr& b);
TensorExpr mul(const TensorExpr& a, const TensorExpr& b);
// concatenated product without canonicalization (factor order preserved verbatim)
TensorExpr rawMul(const TensorExpr& a, const TensorExpr& b);
TensorExpr scalarMul(const TensorExpr& a, const ScalarCoeff& c);
TensorExpr scalarMul(const TensorExpr& a, const Rational& r);
bool equal(const TensorExpr& a, const TensorExpr& b);

inline TensorExpr operator+(const TensorExpr& a, const TensorExpr& b) { return add(a, b); }
inline TensorExpr operator-(const TensorExpr& a, const TensorExpr& b) { return sub(a, b); }
inline TensorExpr operator*(const TensorExpr& a, const TensorExpr& b) { return mul(a, b); }

// Binds two free slots into a dummy pair and canonicalizes.
TensorExpr contract(const TensorExpr& e, const IndexSlot& slotA, const IndexSlot& slotB);

// Capture-avoiding replacement of every factor matching `pattern` (kind, tag,
// slot arity and spaces); derivative jets on the occurrence distribute over the
// replacement by the product rule.
TensorExpr substitute(const TensorExpr& e, const FieldSymbol& pattern, const TensorExpr& replacement);

// Product rule; `slot.space` selects the derivative kind (spacetime partial or
// inner nabla). The derivative is Grassmann-even.
TensorExpr leibnizDerivative(const TensorExpr& e, const IndexSlot& slot);

// Reduces closed gamma chains to metric combinations; throws OpenSpinorLineError
// if any spinor index is left free.
TensorExpr gammaTrace(const TensorExpr& e);

// helpers shared by modules
std::string monomialKey(const TensorMonomial& m);      // factors only
std::string monomialFullKey(const TensorMonomial& m);  // factors + symbolic coeff part
std::string exprStr(const TensorExpr& e);              // debug/golden printing

TensorMonomial renameDummies(const TensorMonomial& m, const std::string& prefix, int& counter);

// drops every monomial containing the given momentum kind/tag (momentum -> 0)
TensorExpr zeroMomentum(const TensorExpr& e, FieldKind kind, int tag);

// simultaneous relabeling of momentum tags (kind-wide) and free index labels
TensorExpr permuteMomentumTags(const TensorExpr& e, const std::map<int, int>& perm);
TensorExpr renameFreeIndices(const TensorExpr& e, const std::map<std::string, std::string>& m);

// binds two free slots of arbitrary variance, inserting a metric when needed
TensorExpr contractWithMetric(const TensorExpr& e, const IndexSlot& a, const IndexSlot& b);

// drops every monomial containing a factor of the given kind
TensorExpr dropKind(const TensorExpr& e, FieldKind k);

bool containsKind(const TensorExpr& e, FieldKind k);
bool containsConst(const TensorExpr& e, SymConst c);
std::vector<int> constPowers(const TensorExpr& e, SymConst c); // per-term exponents

int grassmannParity(const TensorMonomial& m); // 0 even, 1 odd
int ghostNumber(const TensorMonomial& m);

std::vector<IndexSlot> freeSlots(const TensorMonomial& m);

} // namespace vpd
