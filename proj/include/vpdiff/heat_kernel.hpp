#pragma once

#include "vpdiff/expr.hpp"
#include "vpdiff/trace_ideal.hpp"

namespace vpd {

struct DomainError : Error { using Error::Error; };
struct FiniteOrderNotice : Error { using Error::Error; };
struct FormMismatchError : Error { using Error::Error; };

enum class FluctForm { GeneralBC, GeneralMNC, CovariantAE };

// Second-order fluctuation operator, one of
//   -d^2 + B_rho d^rho + C                    (GeneralBC)
//   -d^2 + M_ab nab^a nab^b + N_a nab^a + C   (GeneralMNC, data only)
//   -(d + A)^2 + E                            (CovariantAE)
// Coefficient expressions are matrix-valued; B exposes one free lower
// spacetime slot "rho", A one free lower spacetime slot "mu".
struct FluctuationOperatorSpec {
  FluctForm form = FluctForm::GeneralBC;
  TensorExpr B, C;
  TensorExpr M, N, Cmnc;
  TensorExpr A, E;

  static FluctuationOperatorSpec generalBC(TensorExpr b, TensorExpr c);
  static FluctuationOperatorSpec generalMNC(TensorExpr m, TensorExpr n, TensorExpr c);
  static FluctuationOperatorSpec covariantAE(TensorExpr a, TensorExpr e);
};

// Local divergent integrand multiplying i*(Omega4/eps) inside the x-integral
// and the regularized inner trace.
struct DivergentTraceResult {
  TensorExpr integrand;
};

// Loop-momentum bookkeeping tags used by expandLogTrace output:
// spacetime momentum tag kLoopMomentumTag is the loop momentum p, tags 2..n the
// external momenta; squared-momentum tag kDenominatorTagBase+j is the j-th
// propagator denominator (p+q_j)^2.
inline constexpr int kLoopMomentumTag = 100;
inline constexpr int kDenominatorTagBase = 200;

// Order-n term of the log expansion: propagator denominators and shifted
// momenta expanded over loop/external choices. n in 1..4; n > 4 is finite.
TensorExpr expandLogTrace(const FluctuationOperatorSpec& spec, int n);

// 1/eps pole of the rank-r n-denominator tensor integral over the loop
// momentum, as symmetrized metrics and external momenta; free upper slots
// labeled mu1..mur. Scaleless cases return zero.
TensorExpr divergentMomentumIntegral(int r, int n);

// Divergent part of Tr ln(D/D0) for a GeneralBC operator: local integrand
// derived order by order from the pole table.
DivergentTraceResult divergentTraceGeneral(const FluctuationOperatorSpec& spec);

// Two-term covariant form with coefficients derived once from the general
// master formula through the B = -2A, C = -dA - AA + E substitution and
// verified modulo trace cyclicity and total derivatives.
DivergentTraceResult specializeCovariant(const FluctuationOperatorSpec& spec);

// Derived covariant coefficients (field-strength-square, E-square).
std::pair<Rational, Rational> covariantCoefficients();

// Lexicographically least cyclic rotation representative modulo the trace ideal.
TensorExpr cyclicCanonicalize(const TensorExpr& e);

// Field strength operator of a gauge operator coefficient expression with free
// lower slot "mu": F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu], free
// lower slots "mu", "nu".
TensorExpr fieldStrengthOperator(const TensorExpr& a);

// reduction options used by the divergent-trace theorems
ReductionOptions traceReduction();

} // namespace vpd
