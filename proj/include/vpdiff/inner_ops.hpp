#pragma once

#include "vpdiff/expr.hpp"

namespace vpd {

// Inner-derivative operator algebra for the regularized inner trace.
//
// Operator-valued expressions are factor strings in which NablaOp factors act
// on everything to their right. Public functions return normal-ordered forms:
// field factors first, operator factors trailing.

// commutes every NablaOp factor rightward through the product rule
TensorExpr normalOrderInnerOps(const TensorExpr& e);

// operator product: concatenation in order, then normal ordering
TensorExpr opMul(const TensorExpr& a, const TensorExpr& b);

// gauge operator coefficient of the theory's covariant derivative
//   vector representation: (A_mu)^al_be = A_mu^ga nab_ga eta^al_be - (nab_be A_mu^al)
//   scalar representation:  A_mu       = A_mu^ga nab_ga
// free slots: "mu" (lower spacetime); vector rep adds endo slots "al" (upper
// inner) and "be" (lower inner)
TensorExpr gaugeOperatorVector();
TensorExpr gaugeOperatorScalar();

// matrix composition over the inner endomorphism slots: (X Y)^al_be = X^al_ga Y^ga_be
TensorExpr endoCompose(const TensorExpr& x, const TensorExpr& y);
// endomorphism trace: contracts "al" with "be"
TensorExpr endoTrace(const TensorExpr& x);

// field strength operator in terms of the field-strength components:
//   vector representation: (F_{mu nu})^al_be = F_{mu nu}^ga nab_ga eta^al_be - (nab_be F_{mu nu}^al)
//   scalar representation:  F_{mu nu}        = F_{mu nu}^ga nab_ga
// free slots "mu","nu" (+ endo slots in vector rep)
TensorExpr fieldStrengthOpVector();
TensorExpr fieldStrengthOpScalar();

// the same operators built as d_mu A_nu - d_nu A_mu + [A_mu, A_nu] from the
// gauge operator coefficient; equal to the forms above once the field
// strength is expanded in the gauge field
TensorExpr fieldStrengthOpFromGauge(bool vectorRep);

// replaces every field-strength factor by its gauge-field expansion
//   F_{mu nu}^al = d_mu A_nu^al - d_nu A_mu^al + A_mu^be nab_be A_nu^al - A_nu^be nab_be A_mu^al
TensorExpr expandFieldStrength(const TensorExpr& e);

// Regularized inner functional trace of a scalar operator string:
//   normal-orders, applies the moment rules (odd operator strings vanish,
//   nab_ga nab_de -> Omega1L Lambda^-2 eta_{ga de}, bare strings carry the
//   volume moment symbol), then reduces modulo the divergence constraint and
//   inner integration by parts. Strings with more than two trailing operators
//   are outside the supported reduction.
TensorExpr regularizedInnerTrace(const TensorExpr& e);

// F_{mu nu}^al F^{mu nu}_al as a classical integrand
TensorExpr classicalFieldStrengthSquare();

} // namespace vpd
