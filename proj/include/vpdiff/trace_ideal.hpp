#pragma once

#include <functional>
#include <set>

#include "vpdiff/expr.hpp"

namespace vpd {

// Exact linear reduction of expressions modulo an ideal generated by
//  - cyclic rotations of the matrix-valued factor block (trace context),
//  - total-derivative relations (integration by parts) per index space,
//  - the gauge-algebra divergence constraint nabla_al X^al = 0 per field kind.
//
// The relation span is closed over the monomials reachable from the input;
// reduction is Gaussian elimination over exact rationals, so equality modulo
// the ideal is decidable and the residual is a canonical representative.
struct ReductionOptions {
  bool cyclic = false;
  bool ibpSpacetime = false;
  bool ibpInner = false;
  std::set<FieldKind> divergenceFree;
  // applied to every generated relation term (e.g. operator normal ordering)
  std::function<TensorExpr(const TensorExpr&)> postNormalize;
};

TensorExpr reduceModulo(const TensorExpr& e, const ReductionOptions& opt);
bool equalModulo(const TensorExpr& a, const TensorExpr& b, const ReductionOptions& opt);

// Reduces several single-sector expressions against one shared relation
// universe so their residual vectors are directly comparable. Returns, per
// input, the residual as (canonical shape key, rational) pairs.
std::vector<std::vector<std::pair<std::string, Rational>>> reduceJointly(
    const std::vector<TensorExpr>& es, const ReductionOptions& opt);

// true if the monomial contains a factor with an inner derivative contracted
// against one of its own inner signature slots
bool hasOwnDivergence(const TensorMonomial& m, const std::set<FieldKind>& kinds);

} // namespace vpd
