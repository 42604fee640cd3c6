#pragma once

#include <string>
#include <vector>

#include "vpdiff/heat_kernel.hpp"
#include "vpdiff/inner_ops.hpp"

namespace vpd {

struct UnsupportedGaugeError : Error { using Error::Error; };

struct MatterContent {
  int gaugeFieldCount = 0;   // minimally coupled Yang-Mills fields
  int chiralDiracCount = 0;  // chiral fermions (a full Dirac field counts as 2)
  int complexScalarCount = 0;// single complex scalars (a doublet counts as 2)
  bool includePureGauge = true;

  static MatterContent pure() { return {0, 0, 0, true}; }
  static MatterContent standardModel() { return {12, 45, 2, true}; }
};

struct LedgerEntry {
  std::string species;
  Rational twelfths;   // signed contribution to the bracket, in twelfths
  std::string note;
};

struct BetaResult {
  Rational coefficient; // beta(g) = coefficient * g^3 / (180 (4 pi)^5)
  bool asymptoticallyFree = false;
};

struct CouplingRenormalization {
  Rational c; // g_R = g (1 - g^2/(180 (4 pi)^5) * c * 1/eps + O(g^4))
};

// gauge and ghost fluctuation operator specs in covariant form; only the
// Feynman-type gauge parameter is supported
std::pair<FluctuationOperatorSpec, FluctuationOperatorSpec>
gaugeFluctuationOperators(const Rational& xi = Rational(1));

// divergent parts of the individual determinants and their weighted assembly;
// results are local integrands proportional to Omega1L * Lambda^-2 * F.F
TensorExpr divergentGaugeDeterminant();
TensorExpr divergentGhostDeterminant();
TensorExpr assembleOneLoopDivergence();

LedgerEntry matterGaugeContribution();
LedgerEntry matterDiracContribution(bool chiral);
LedgerEntry matterScalarContribution(bool doublet);

std::pair<std::vector<LedgerEntry>, Rational> ledgerFor(const MatterContent& content);
std::pair<std::vector<LedgerEntry>, Rational> smLedger();

CouplingRenormalization renormalizedCoupling(const MatterContent& content);
BetaResult betaFunction(const MatterContent& content);

// per-species pipeline coefficient multiplying (Omega4/eps) Omega1L Lambda^-2 F.F
Rational pureGaugeGhostCoefficient();  // -11/3
Rational matterGaugeCoefficient();     // -1/6
Rational matterDiracCoefficient(bool chiral);
Rational matterScalarCoefficient(bool doublet);

// exact rational identity 2 * Omega4 * Omega1L = 1/(180 (4 pi)^5) with the
// pi powers cancelled
bool couplingNormalizationIdentity();

// exact proportionality of an assembled pole term to the classical integrand;
// throws when the expression is not a single F.F structure
Rational extractFFCoefficient(const TensorExpr& e);

} // namespace vpd
