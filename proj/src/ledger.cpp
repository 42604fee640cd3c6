#include "vpdiff/ledger.hpp"

#include <mutex>

namespace vpd {

namespace {

// regularized inner trace of the contracted square Tr_X[F_{mu nu} F^{mu nu}]
TensorExpr traceFFSquare(bool vectorRep) {
  TensorExpr fop = vectorRep ? fieldStrengthOpVector() : fieldStrengthOpScalar();
  TensorExpr f2 = renameFreeIndices(fop, {{"mu", "mu2"}, {"nu", "nu2"}});
  TensorExpr prod = vectorRep ? endoTrace(endoCompose(fop, f2)) : opMul(fop, f2);
  prod = contractWithMetric(prod, dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "mu2"));
  prod = contractWithMetric(prod, dn(Space::Spacetime, "nu"), dn(Space::Spacetime, "nu2"));
  return regularizedInnerTrace(prod);
}

// regularized inner trace of tr_L(E^2) for E^{mu nu} = c * F_op^{mu nu}
TensorExpr traceESquareLorentz(bool vectorRep, const Rational& c) {
  TensorExpr fop = vectorRep ? fieldStrengthOpVector() : fieldStrengthOpScalar();
  TensorExpr e1 = scalarMul(fop, c);
  TensorExpr e2 = renameFreeIndices(e1, {{"mu", "mu2"}, {"nu", "nu2"}});
  TensorExpr prod = vectorRep ? endoTrace(endoCompose(e1, e2)) : opMul(e1, e2);
  // tr(E E) = E^mu_nu E^nu_mu: second-first and first-second pairings
  prod = contractWithMetric(prod, dn(Space::Spacetime, "nu"), dn(Space::Spacetime, "mu2"));
  prod = contractWithMetric(prod, dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu2"));
  return regularizedInnerTrace(prod);
}

// spinor-block E^2 trace for E = -(1/2) F^{mu nu} gamma_mu gamma_nu
TensorExpr traceESquareDirac() {
  auto gam = [](const char* mu, const char* r, const char* c) {
    IndexSlot row{Space::Spinor, Variance::Lower, r, true};
    IndexSlot col{Space::Spinor, Variance::Upper, c, true};
    return makeField(FieldKind::GammaMatrix, {dn(Space::Spacetime, mu), row, col});
  };
  // two E insertions forming a closed spinor loop
  TensorExpr f1 = renameFreeIndices(fieldStrengthOpScalar(), {{"mu", "m1"}, {"nu", "n1"}});
  TensorExpr f2 = renameFreeIndices(fieldStrengthOpScalar(), {{"mu", "m2"}, {"nu", "n2"}});
  TensorExpr gammas = TensorExpr::fromFactors(
      {gam("g1", "s1", "s2"), gam("g2", "s2", "s3"), gam("g3", "s3", "s4"),
       gam("g4", "s4", "s1")});
  TensorExpr prod = opMul(opMul(f1, f2), gammas);
  // raise the gamma slots into the F-operator slots
  const char* pairs[4][2] = {{"m1", "g1"}, {"n1", "g2"}, {"m2", "g3"}, {"n2", "g4"}};
  for (auto& pr : pairs)
    prod = contractWithMetric(prod, dn(Space::Spacetime, pr[0]), dn(Space::Spacetime, pr[1]));
  prod = scalarMul(prod, Rational(1, 4)); // (-1/2)^2
  prod = gammaTrace(prod);
  return regularizedInnerTrace(prod);
}

ScalarCoeff poleI(Rational r) {
  ScalarCoeff c(std::move(r));
  c.mulI(1);
  c.mulConst(SymConst::Omega4, 1);
  c.mulConst(SymConst::InvEps, 1);
  return c;
}

// real pole normalizer used when extracting trace coefficients
ScalarCoeff poleReal(Rational r) {
  ScalarCoeff c(std::move(r));
  c.mulConst(SymConst::Omega4, 1);
  c.mulConst(SymConst::InvEps, 1);
  return c;
}

// unit trace of a four-dimensional block, computed by the engine
Rational blockUnitTrace() {
  TensorExpr tr = contract(
      TensorExpr::fromFactors({metric(dn(Space::Spacetime, "m"), up(Space::Spacetime, "n"))}),
      dn(Space::Spacetime, "m"), up(Space::Spacetime, "n"));
  if (tr.terms.size() != 1 || !tr.terms[0].factors.empty())
    throw Error("blockUnitTrace: unexpected form");
  return tr.terms[0].coeff.rat;
}

struct SpeciesTraces {
  Rational ffVector;  // Tr_X[F F]_vec in units Omega1L Lambda^-2 F.F
  Rational ffScalar;
};

const SpeciesTraces& speciesTraces() {
  static SpeciesTraces st;
  static bool ready = false;
  static std::mutex mx;
  std::lock_guard<std::mutex> lock(mx);
  if (!ready) {
    st.ffVector = extractFFCoefficient(scalarMul(traceFFSquare(true), poleReal(Rational(1))));
    st.ffScalar = extractFFCoefficient(scalarMul(traceFFSquare(false), poleReal(Rational(1))));
    if (st.ffScalar != Rational(1))
      throw Error("speciesTraces: scalar-representation trace normalization is off");
    if (st.ffVector != Rational(4))
      throw Error("speciesTraces: inner endomorphism trace factor is not four");
    ready = true;
  }
  return st;
}

} // namespace

Rational extractFFCoefficient(const TensorExpr& e) {
  TensorExpr canon = canonicalize(e);
  if (canon.isZero()) return Rational(0);
  TensorExpr ff = classicalFieldStrengthSquare();
  if (ff.terms.size() != 1) throw Error("extractFFCoefficient: bad reference");
  std::string refKey = monomialKey(ff.terms[0]);
  Rational out(0);
  bool seen = false;
  for (const auto& t : canon.terms) {
    if (monomialKey(t) != refKey)
      throw Error("extractFFCoefficient: term is not the classical F.F integrand: " +
                  monomialKey(t));
    // expected symbols: i^0 (Omega4/eps) Omega1L Lambda^-2 exactly
    if (t.coeff.iPow != 0) throw Error("extractFFCoefficient: leftover imaginary unit");
    std::map<SymConst, int> want = {{SymConst::Omega4, 1},
                                    {SymConst::InvEps, 1},
                                    {SymConst::Omega1L, 1},
                                    {SymConst::Lambda, -2}};
    if (t.coeff.pows != want)
      throw Error("extractFFCoefficient: unexpected constant structure");
    if (!t.coeff.momsq.empty()) throw Error("extractFFCoefficient: leftover momenta");
    if (seen) throw Error("extractFFCoefficient: multiple F.F sectors");
    out = t.coeff.rat;
    seen = true;
  }
  return out;
}

std::pair<FluctuationOperatorSpec, FluctuationOperatorSpec>
gaugeFluctuationOperators(const Rational& xi) {
  if (xi != Rational(1))
    throw UnsupportedGaugeError("gaugeFluctuationOperators: only xi = 1 is supported");
  TensorExpr aOp = gaugeOperatorVector();
  TensorExpr eGauge = scalarMul(fieldStrengthOpVector(), Rational(-2));
  FluctuationOperatorSpec gauge = FluctuationOperatorSpec::covariantAE(aOp, eGauge);
  FluctuationOperatorSpec ghost = FluctuationOperatorSpec::covariantAE(aOp, TensorExpr::zero());
  return {gauge, ghost};
}

namespace {

// Tr ln(D/D0)^div in units of i (Omega4/eps) Omega1L Lambda^-2 F.F for an
// operator -D^2 + E with the given blocks; the covariant coefficients come
// from the master-formula derivation
Rational trLnCoefficient(bool vectorRep, bool lorentzBlock, const Rational& eFactor,
                         bool diracBlock) {
  auto [cF, cE] = covariantCoefficients();
  const SpeciesTraces& st = speciesTraces();
  Rational unit = blockUnitTrace(); // 4
  Rational ff = vectorRep ? st.ffVector : st.ffScalar;

  Rational bracket = cF * (lorentzBlock || diracBlock ? unit : Rational(1)) * ff;
  if (diracBlock) {
    Rational eTrace = extractFFCoefficient(scalarMul(traceESquareDirac(), poleReal(Rational(1))));
    bracket += cE * eTrace;
  } else if (!eFactor.isZero()) {
    Rational eTrace = extractFFCoefficient(
        scalarMul(traceESquareLorentz(vectorRep, eFactor), poleReal(Rational(1))));
    bracket += cE * eTrace;
  }
  // Tr ln^div = -i(Omega4/eps) * bracket * ...: report in +i units
  return -bracket;
}

TensorExpr coefficientTimesFF(const Rational& c, bool imaginary) {
  ScalarCoeff pref(c);
  if (imaginary) pref.mulI(1);
  pref.mulConst(SymConst::Omega4, 1);
  pref.mulConst(SymConst::InvEps, 1);
  pref.mulConst(SymConst::Omega1L, 1);
  pref.mulConst(SymConst::Lambda, -2);
  return scalarMul(classicalFieldStrengthSquare(), pref);
}

// determinant weight map: contribution to the effective action is -i w Tr ln D
Rational detContribution(const Rational& weight, const Rational& trLnUnitsI) {
  // (-i) * w * (i * x) = w * x
  return weight * trLnUnitsI;
}

} // namespace

TensorExpr divergentGaugeDeterminant() {
  Rational c = trLnCoefficient(true, true, Rational(-2), false);
  return coefficientTimesFF(c, true);
}

TensorExpr divergentGhostDeterminant() {
  Rational c = trLnCoefficient(true, false, Rational(0), false);
  return coefficientTimesFF(c, true);
}

Rational pureGaugeGhostCoefficient() {
  Rational gauge = trLnCoefficient(true, true, Rational(-2), false);
  Rational ghost = trLnCoefficient(true, false, Rational(0), false);
  return detContribution(Rational(-1, 2), gauge) + detContribution(Rational(1), ghost);
}

TensorExpr assembleOneLoopDivergence() {
  TensorExpr out = coefficientTimesFF(pureGaugeGhostCoefficient(), false);
  for (int p : constPowers(out, SymConst::Lambda))
    if (p != -2) throw Error("assembleOneLoopDivergence: stray regulator power");
  return out;
}

Rational matterGaugeCoefficient() {
  Rational vec = trLnCoefficient(false, true, Rational(1), false);
  Rational gh = trLnCoefficient(false, false, Rational(0), false);
  return detContribution(Rational(-1, 2), vec) + detContribution(Rational(1), gh);
}

Rational matterDiracCoefficient(bool chiral) {
  Rational sq = trLnCoefficient(false, false, Rational(0), true);
  Rational full = detContribution(Rational(1, 2), sq);
  return chiral ? full / Rational(2) : full;
}

Rational matterScalarCoefficient(bool doublet) {
  Rational single = detContribution(Rational(-1), trLnCoefficient(false, false, Rational(0), false));
  return doublet ? single * Rational(2) : single;
}

LedgerEntry matterGaugeContribution() {
  Rational c = matterGaugeCoefficient();
  return {"yang-mills gauge field", c * Rational(-12), "per independent gauge field, with ghost"};
}

LedgerEntry matterDiracContribution(bool chiral) {
  Rational c = matterDiracCoefficient(chiral);
  return {chiral ? "chiral dirac field" : "dirac field", c * Rational(-12),
          chiral ? "half of a full dirac field" : "squared-operator determinant"};
}

LedgerEntry matterScalarContribution(bool doublet) {
  Rational c = matterScalarCoefficient(doublet);
  return {doublet ? "complex scalar doublet" : "complex scalar", c * Rational(-12),
          "potential term leaves the field-strength pole untouched"};
}

std::pair<std::vector<LedgerEntry>, Rational> ledgerFor(const MatterContent& content) {
  std::vector<LedgerEntry> entries;
  Rational bracket(0);
  if (content.includePureGauge) {
    Rational pure = pureGaugeGhostCoefficient() * Rational(-12);
    entries.push_back({"gauge and ghost fields", pure, "pure-theory one-loop ledger entry"});
    bracket += pure;
  }
  if (content.gaugeFieldCount > 0) {
    Rational per = matterGaugeContribution().twelfths;
    Rational tot = per * Rational(content.gaugeFieldCount);
    entries.push_back({"minimally coupled gauge fields", tot,
                       std::to_string(content.gaugeFieldCount) + " fields"});
    bracket += tot;
  }
  if (content.chiralDiracCount > 0) {
    Rational per = matterDiracContribution(true).twelfths;
    Rational tot = per * Rational(content.chiralDiracCount);
    entries.push_back({"chiral dirac fields", tot,
                       std::to_string(content.chiralDiracCount) + " chiral fields"});
    bracket += tot;
  }
  if (content.complexScalarCount > 0) {
    Rational per = matterScalarContribution(false).twelfths;
    Rational tot = per * Rational(content.complexScalarCount);
    entries.push_back({"complex scalars", tot,
                       std::to_string(content.complexScalarCount) + " single complex scalars"});
    bracket += tot;
  }
  return {entries, bracket};
}

std::pair<std::vector<LedgerEntry>, Rational> smLedger() {
  return ledgerFor(MatterContent::standardModel());
}

CouplingRenormalization renormalizedCoupling(const MatterContent& content) {
  auto [entries, bracket] = ledgerFor(content);
  return {bracket / Rational(12)};
}

BetaResult betaFunction(const MatterContent& content) {
  auto [entries, bracket] = ledgerFor(content);
  Rational c = -(bracket / Rational(12));
  return {c, c.sign() < 0};
}

bool couplingNormalizationIdentity() {
  // 2 * (1/(8 pi^2)) * (1/(720 (4 pi)^3)) == 1/(180 (4 pi)^5): pi^5 cancels
  Rational lhs = Rational(2) * Rational(1, 8) * Rational(1, 720 * 64);
  Rational rhs = Rational(1, 180 * 1024);
  return lhs == rhs;
}

} // namespace vpd
