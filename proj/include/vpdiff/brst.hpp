#pragma once

#include "vpdiff/expr.hpp"
#include "vpdiff/trace_ideal.hpp"

namespace vpd {

struct GaugeFunctionalError : Error { using Error::Error; };

// Nilpotent slope operator on polynomials of {A, omega, omega*, h, psi}:
//   s A_mu^al  = d_mu om^al + A_mu^be nab_be om^al - om^be nab_be A_mu^al
//   s om*_ga   = -h_ga
//   s om^de    = -om^be nab_be om^de
//   s h_ga     = 0
//   s psi      = -om^be nab_be psi
// extended as a graded derivation commuting with the derivative jets.
TensorExpr slopeOperator(const TensorExpr& e);

// delta_theta = theta * s with the chosen anticommuting parameter
TensorExpr brstVariation(const TensorExpr& e);
TensorExpr brstVariationWith(const TensorExpr& e, FieldKind thetaKind);

struct NilpotencyVerdict {
  bool pass = false;
  TensorExpr residual;
};
NilpotencyVerdict nilpotencyCheck(const TensorExpr& e);

// s(s e) = 0 over a reproducible random corpus of field monomials with
// derivative jets and contractions; returns the number actually tested
bool nilpotencyCorpus(long long size, uint64_t seed, long long* tested = nullptr);

// the covariant gauge-fixing functional f^ga = d^mu A_mu^ga (free slot "ga")
TensorExpr covariantGaugeFixing();

// gauge fermion integrand -(1/Lambda^2)(om*_ga f^ga + (xi/2) om*_ga h^ga);
// f must carry exactly one free upper inner slot "ga" and ghost number zero
TensorExpr gaugeFermion(const TensorExpr& f);

// s of the gauge fermion; verified against the three-term decomposition
// (1/Lambda^2)(om* sf + h f + (xi/2) h h) before returning
TensorExpr sOfGaugeFermion(const TensorExpr& f);

struct InvarianceReport {
  bool pass = false;
  TensorExpr residual;       // nonzero residual after the reduction, if any
  bool gaugePartPass = false;
  bool fermionPartPass = false;
  // the residual of the classical part equals the compensating term the
  // transforming inner metric would supply; identified exactly when true
  bool obstructionIdentified = false;
};

// delta_theta of the gauge-fixed action integrand: the gauge-fermion part
// vanishes by nilpotency; the classical part reduces to the inner-metric
// compensation term, which survives because the displayed field variation
// alone does not transform the flat inner metric contracting the two
// field-strength slots (the full diffeomorphism action would)
InvarianceReport brstInvarianceOfAction();

// -(1/(2 Lambda^2)) F^{mu nu}_al F_{mu nu}^be (nab_be om^al), expanded in the
// gauge field: the exact classical-part residual
TensorExpr metricCompensationTerm();

// classical integrand -(1/(4 Lambda^2)) F.F expanded in the gauge field
TensorExpr classicalActionIntegrand();

// reduction used by the invariance check: total derivatives in both spaces
// plus the divergence-free constraints of the gauge algebra
ReductionOptions actionReduction();

} // namespace vpd
