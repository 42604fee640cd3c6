#include "vpdiff/brst.hpp"

#include "vpdiff/inner_ops.hpp"
#include "vpdiff/philox.hpp"

namespace vpd {

namespace {

IndexSlot dum(Space sp, const std::string& l, Variance v) { return {sp, v, l, true}; }

// generator images with formal free labels matching the factory signatures
TensorExpr imageOfGaugeA() {
  // d_mu om^al + A_mu^be nab_be om^al - om^be nab_be A_mu^al
  FieldSymbol dOm = makeField(FieldKind::GhostOmega, {up(Space::Inner, "al")});
  dOm.derivs.push_back(dn(Space::Spacetime, "mu"));

  FieldSymbol a1 = makeField(FieldKind::GaugeA,
                             {dn(Space::Spacetime, "mu"), dum(Space::Inner, "#v", Variance::Upper)});
  FieldSymbol om1 = makeField(FieldKind::GhostOmega, {up(Space::Inner, "al")});
  om1.derivs.push_back(dum(Space::Inner, "#v", Variance::Lower));

  FieldSymbol om2 = makeField(FieldKind::GhostOmega, {dum(Space::Inner, "#w", Variance::Upper)});
  FieldSymbol a2 = makeField(FieldKind::GaugeA, {dn(Space::Spacetime, "mu"), up(Space::Inner, "al")});
  a2.derivs.push_back(dum(Space::Inner, "#w", Variance::Lower));

  TensorExpr e;
  e.terms.push_back(TensorMonomial(ScalarCoeff::one(), {dOm}));
  e.terms.push_back(TensorMonomial(ScalarCoeff::one(), {a1, om1}));
  e.terms.push_back(TensorMonomial(ScalarCoeff(Rational(-1)), {om2, a2}));
  return e;
}

TensorExpr imageOfGhost() {
  // -om^be nab_be om^de
  FieldSymbol om1 = makeField(FieldKind::GhostOmega, {dum(Space::Inner, "#v", Variance::Upper)});
  FieldSymbol om2 = makeField(FieldKind::GhostOmega, {up(Space::Inner, "de")});
  om2.derivs.push_back(dum(Space::Inner, "#v", Variance::Lower));
  TensorExpr e;
  e.terms.push_back(TensorMonomial(ScalarCoeff(Rational(-1)), {om1, om2}));
  return e;
}

TensorExpr imageOfAntighost() {
  TensorExpr e;
  e.terms.push_back(TensorMonomial(ScalarCoeff(Rational(-1)),
                                   {makeField(FieldKind::AuxiliaryH, {dn(Space::Inner, "ga")})}));
  return e;
}

TensorExpr imageOfPsi(const FieldSymbol& psi) {
  FieldSymbol om = makeField(FieldKind::GhostOmega, {dum(Space::Inner, "#v", Variance::Upper)});
  FieldSymbol p = psi;
  p.derivs.clear();
  p.derivs.push_back(dum(Space::Inner, "#v", Variance::Lower));
  TensorExpr e;
  e.terms.push_back(TensorMonomial(ScalarCoeff(Rational(-1)), {om, p}));
  return e;
}

// formal slot labels of the generator signatures, by kind
std::vector<std::string> formalLabels(FieldKind k) {
  switch (k) {
    case FieldKind::GaugeA: return {"mu", "al"};
    case FieldKind::GhostOmega: return {"de"};
    case FieldKind::AntighostOmegaStar: return {"ga"};
    case FieldKind::AuxiliaryH: return {"ga"};
    case FieldKind::MatterPsi: return {};
    default: return {};
  }
}

// the image with formal labels renamed onto the occurrence's actual slots and
// the occurrence's derivative jet distributed by the product rule
std::vector<TensorMonomial> instantiateImage(const FieldSymbol& occ, int& fresh) {
  TensorExpr image;
  switch (occ.kind) {
    case FieldKind::GaugeA: image = imageOfGaugeA(); break;
    case FieldKind::GhostOmega: image = imageOfGhost(); break;
    case FieldKind::AntighostOmegaStar: image = imageOfAntighost(); break;
    case FieldKind::AuxiliaryH: return {};
    case FieldKind::MatterPsi: image = imageOfPsi(occ); break;
    default:
      throw UnknownFieldError("slopeOperator: no variation rule for this factor");
  }
  std::vector<std::string> formals = formalLabels(occ.kind);
  std::vector<TensorMonomial> out;
  for (const auto& t : image.terms) {
    TensorMonomial m = renameDummies(t, "#s" + std::to_string(fresh++) + "_", fresh);
    // formal -> actual slots, with variance flips where the occurrence differs
    for (size_t i = 0; i < formals.size(); ++i) {
      // the factory signature fixes the formal variance per position
      Variance formalVar;
      Space space;
      if (occ.kind == FieldKind::GaugeA) {
        formalVar = i == 0 ? Variance::Lower : Variance::Upper;
        space = i == 0 ? Space::Spacetime : Space::Inner;
      } else if (occ.kind == FieldKind::GhostOmega) {
        formalVar = Variance::Upper;
        space = Space::Inner;
      } else {
        formalVar = Variance::Lower;
        space = Space::Inner;
      }
      const IndexSlot& actual = occ.indices[i];
      bool flipVar = actual.variance != formalVar;
      for (auto& f : m.factors) {
        for (auto& s : f.indices)
          if (!s.dummy && s.space == space && s.label == formals[i]) {
            s.label = actual.label;
            s.dummy = actual.dummy;
            if (flipVar) s.variance = flip(s.variance);
          }
        for (auto& s : f.derivs)
          if (!s.dummy && s.space == space && s.label == formals[i]) {
            s.label = actual.label;
            s.dummy = actual.dummy;
            if (flipVar) s.variance = flip(s.variance);
          }
      }
    }
    out.push_back(std::move(m));
  }
  // distribute the occurrence's derivative jet
  for (const auto& d : occ.derivs) {
    std::vector<TensorMonomial> next;
    for (const auto& jm : out)
      for (size_t i = 0; i < jm.factors.size(); ++i) {
        switch (jm.factors[i].kind) {
          case FieldKind::MetricEta:
          case FieldKind::MomentumK:
          case FieldKind::MomentumSmallK:
          case FieldKind::NablaOp:
          case FieldKind::BrstTheta:
          case FieldKind::BrstThetaPrime:
            continue;
          default:
            break;
        }
        TensorMonomial n = jm;
        n.factors[i].derivs.push_back(d);
        next.push_back(std::move(n));
      }
    out = std::move(next);
  }
  return out;
}

bool isBrstField(const FieldSymbol& f) {
  switch (f.kind) {
    case FieldKind::GaugeA:
    case FieldKind::GhostOmega:
    case FieldKind::AntighostOmegaStar:
    case FieldKind::AuxiliaryH:
    case FieldKind::MatterPsi:
      return true;
    default:
      return false;
  }
}

} // namespace

TensorExpr slopeOperator(const TensorExpr& e) {
  TensorExpr out;
  int fresh = 0;
  for (const auto& t : e.terms) {
    int prefixParity = 0;
    for (size_t i = 0; i < t.factors.size(); ++i) {
      const FieldSymbol& f = t.factors[i];
      if (isBrstField(f)) {
        for (auto& piece : instantiateImage(f, fresh)) {
          TensorMonomial m;
          m.coeff = t.coeff * piece.coeff;
          if (prefixParity) m.coeff.rat = -m.coeff.rat;
          m.factors.assign(t.factors.begin(), t.factors.begin() + i);
          m.factors.insert(m.factors.end(), piece.factors.begin(), piece.factors.end());
          m.factors.insert(m.factors.end(), t.factors.begin() + i + 1, t.factors.end());
          out.terms.push_back(std::move(m));
        }
      } else if (f.kind == FieldKind::MetricEta || f.kind == FieldKind::MomentumK ||
                 f.kind == FieldKind::MomentumSmallK || f.kind == FieldKind::BrstTheta ||
                 f.kind == FieldKind::BrstThetaPrime || f.kind == FieldKind::NablaOp) {
        // parameter-independent factor: no variation
      } else {
        throw UnknownFieldError("slopeOperator: unsupported factor species");
      }
      if (f.odd) prefixParity ^= 1;
    }
  }
  return canonicalize(out);
}

TensorExpr brstVariationWith(const TensorExpr& e, FieldKind thetaKind) {
  TensorExpr s = slopeOperator(e);
  TensorExpr theta = TensorExpr::fromFactors({makeField(thetaKind, {})});
  return mul(theta, s);
}

TensorExpr brstVariation(const TensorExpr& e) {
  return brstVariationWith(e, FieldKind::BrstTheta);
}

namespace {

// strips the leading theta of every monomial; by the factor ordering the
// parameter is leftmost in canonical form
TensorExpr stripTheta(const TensorExpr& e) {
  TensorExpr out;
  for (const auto& t : e.terms) {
    if (t.factors.empty() || t.factors.front().kind != FieldKind::BrstTheta)
      throw InternalSignError("stripTheta: parameter is not leftmost");
    TensorMonomial m = t;
    m.factors.erase(m.factors.begin());
    out.terms.push_back(std::move(m));
  }
  return canonicalize(out);
}

} // namespace

NilpotencyVerdict nilpotencyCheck(const TensorExpr& e) {
  // route through the parameterized variation to exercise the theta handling
  TensorExpr first = stripTheta(brstVariation(e));
  TensorExpr second = stripTheta(brstVariation(first));
  return {second.isZero(), second};
}

bool nilpotencyCorpus(long long size, uint64_t seed, long long* testedOut) {
  CounterStream cs{seed, 0xb2570000u};
  long long tested = 0;
  for (long long iter = 0; iter < size * 3 && tested < size; ++iter) {
    double u0 = cs.pair(iter, 0)[0];
    int n = 1 + (int)(u0 * 3);
    std::vector<FieldSymbol> fs;
    for (int i = 0; i < n; ++i) {
      double pick = cs.pair(iter, 10 + i)[0];
      std::string st = "m" + std::to_string(i), in = "a" + std::to_string(i);
      if (pick < 0.2)
        fs.push_back(makeField(FieldKind::GaugeA, {dn(Space::Spacetime, st), up(Space::Inner, in)}));
      else if (pick < 0.4)
        fs.push_back(makeField(FieldKind::GhostOmega, {up(Space::Inner, in)}));
      else if (pick < 0.6)
        fs.push_back(makeField(FieldKind::AntighostOmegaStar, {dn(Space::Inner, in)}));
      else if (pick < 0.8)
        fs.push_back(makeField(FieldKind::AuxiliaryH, {dn(Space::Inner, in)}));
      else {
        FieldSymbol p = makeField(FieldKind::MatterPsi, {});
        p.odd = cs.pair(iter, 40 + i)[0] < 0.5;
        fs.push_back(p);
      }
      if (cs.pair(iter, 20 + i)[0] < 0.5)
        fs.back().derivs.push_back(dn(Space::Spacetime, "d" + std::to_string(i)));
      if (cs.pair(iter, 30 + i)[0] < 0.4)
        fs.back().derivs.push_back(dn(Space::Inner, "e" + std::to_string(i)));
    }
    // bind a random inner pair when one is available
    std::vector<IndexSlot*> ups, downs;
    TensorMonomial m(ScalarCoeff::one(), fs);
    for (auto& f : m.factors) {
      for (auto& sl : f.indices)
        if (sl.space == Space::Inner) (sl.variance == Variance::Upper ? ups : downs).push_back(&sl);
      for (auto& sl : f.derivs)
        if (sl.space == Space::Inner) (sl.variance == Variance::Upper ? ups : downs).push_back(&sl);
    }
    if (!ups.empty() && !downs.empty() && cs.pair(iter, 50)[0] < 0.5) {
      IndexSlot* upSlot = ups[cs.word(iter, 51) % ups.size()];
      IndexSlot* dnSlot = downs[cs.word(iter, 52) % downs.size()];
      upSlot->dummy = dnSlot->dummy = true;
      upSlot->label = dnSlot->label = "bb";
    }
    TensorExpr e;
    try {
      e = canonicalize(TensorExpr::fromMonomial(m));
    } catch (const MalformedExpressionError&) {
      continue;
    }
    if (e.isZero()) continue;
    ++tested;
    if (!nilpotencyCheck(e).pass) {
      if (testedOut) *testedOut = tested;
      return false;
    }
  }
  if (testedOut) *testedOut = tested;
  return tested >= size / 2; // the draw must not degenerate
}

TensorExpr covariantGaugeFixing() {
  FieldSymbol a = makeField(FieldKind::GaugeA,
                            {dum(Space::Spacetime, "#f", Variance::Lower), up(Space::Inner, "ga")});
  a.derivs.push_back(dum(Space::Spacetime, "#f", Variance::Upper));
  return TensorExpr::fromFactors({a});
}

namespace {

void validateGaugeFunctional(const TensorExpr& f) {
  if (f.isZero()) throw GaugeFunctionalError("gaugeFermion: empty gauge-fixing functional");
  for (const auto& t : f.terms) {
    auto free = freeSlots(t);
    if (free.size() != 1 || free[0].space != Space::Inner ||
        free[0].variance != Variance::Upper || free[0].label != "ga")
      throw GaugeFunctionalError(
          "gaugeFermion: functional must carry exactly one free upper inner slot 'ga'");
    if (ghostNumber(t) != 0)
      throw GaugeFunctionalError("gaugeFermion: functional must have ghost number zero");
  }
}

} // namespace

TensorExpr gaugeFermion(const TensorExpr& f) {
  validateGaugeFunctional(f);
  TensorExpr omStar = TensorExpr::fromFactors(
      {makeField(FieldKind::AntighostOmegaStar, {dn(Space::Inner, "gax")})});
  TensorExpr first = contract(mul(omStar, f), dn(Space::Inner, "gax"), up(Space::Inner, "ga"));
  TensorExpr h = TensorExpr::fromFactors({makeField(FieldKind::AuxiliaryH, {up(Space::Inner, "ga")})});
  TensorExpr second = contract(mul(omStar, h), dn(Space::Inner, "gax"), up(Space::Inner, "ga"));
  ScalarCoeff xiHalf(Rational(1, 2));
  xiHalf.mulConst(SymConst::Xi, 1);
  ScalarCoeff minusL2(Rational(-1));
  minusL2.mulConst(SymConst::Lambda, -2);
  return scalarMul(add(first, scalarMul(second, xiHalf)), minusL2);
}

TensorExpr sOfGaugeFermion(const TensorExpr& f) {
  TensorExpr psi = gaugeFermion(f);
  TensorExpr result = slopeOperator(psi);

  // three-term decomposition: (1/Lambda^2)[ om* (s f) + h f + (xi/2) h h ]
  TensorExpr sf = slopeOperator(f); // the ghost kernel applied to omega
  TensorExpr omStar = TensorExpr::fromFactors(
      {makeField(FieldKind::AntighostOmegaStar, {dn(Space::Inner, "gax")})});
  TensorExpr t1 = contract(mul(omStar, sf), dn(Space::Inner, "gax"), up(Space::Inner, "ga"));
  TensorExpr hLow = TensorExpr::fromFactors(
      {makeField(FieldKind::AuxiliaryH, {dn(Space::Inner, "gax")})});
  TensorExpr t2 = contract(mul(hLow, f), dn(Space::Inner, "gax"), up(Space::Inner, "ga"));
  TensorExpr hUp = TensorExpr::fromFactors({makeField(FieldKind::AuxiliaryH, {up(Space::Inner, "ga")})});
  TensorExpr t3 = contract(mul(hLow, hUp), dn(Space::Inner, "gax"), up(Space::Inner, "ga"));
  ScalarCoeff xiHalf(Rational(1, 2));
  xiHalf.mulConst(SymConst::Xi, 1);
  ScalarCoeff invL2(Rational(1));
  invL2.mulConst(SymConst::Lambda, -2);
  TensorExpr target = scalarMul(add(add(t1, t2), scalarMul(t3, xiHalf)), invL2);

  if (!equal(result, target))
    throw Error("sOfGaugeFermion: decomposition into ghost, source and quadratic terms failed");
  return result;
}

TensorExpr classicalActionIntegrand() {
  TensorExpr ff = expandFieldStrength(classicalFieldStrengthSquare());
  ScalarCoeff pref(Rational(-1, 4));
  pref.mulConst(SymConst::Lambda, -2);
  return scalarMul(ff, pref);
}

ReductionOptions actionReduction() {
  ReductionOptions opt;
  opt.ibpSpacetime = true;
  opt.ibpInner = true;
  opt.divergenceFree = {FieldKind::GaugeA, FieldKind::GhostOmega, FieldKind::AntighostOmegaStar,
                        FieldKind::AuxiliaryH};
  return opt;
}

TensorExpr metricCompensationTerm() {
  TensorExpr f1 = TensorExpr::fromFactors({makeField(
      FieldKind::FieldStrengthF,
      {dn(Space::Spacetime, "m"), dn(Space::Spacetime, "n"), dn(Space::Inner, "a")})});
  TensorExpr f2 = TensorExpr::fromFactors({makeField(
      FieldKind::FieldStrengthF,
      {up(Space::Spacetime, "m2"), up(Space::Spacetime, "n2"), up(Space::Inner, "b")})});
  FieldSymbol om = makeField(FieldKind::GhostOmega, {up(Space::Inner, "a2")});
  om.derivs.push_back(dn(Space::Inner, "b2"));
  TensorExpr prod = mul(mul(f1, f2), TensorExpr::fromFactors({om}));
  prod = contract(prod, dn(Space::Spacetime, "m"), up(Space::Spacetime, "m2"));
  prod = contract(prod, dn(Space::Spacetime, "n"), up(Space::Spacetime, "n2"));
  prod = contract(prod, dn(Space::Inner, "a"), up(Space::Inner, "a2"));
  prod = contract(prod, up(Space::Inner, "b"), dn(Space::Inner, "b2"));
  ScalarCoeff c(Rational(-1, 2));
  c.mulConst(SymConst::Lambda, -2);
  return scalarMul(expandFieldStrength(prod), c);
}

InvarianceReport brstInvarianceOfAction() {
  InvarianceReport rep;

  // (a) classical part: reduce s of the action integrand modulo total
  // derivatives and the divergence constraints
  TensorExpr sAction = slopeOperator(classicalActionIntegrand());
  TensorExpr residual = reduceModulo(sAction, actionReduction());
  rep.gaugePartPass = residual.isZero();
  rep.residual = residual;
  if (!rep.gaugePartPass) {
    TensorExpr diff = sub(sAction, metricCompensationTerm());
    rep.obstructionIdentified = reduceModulo(diff, actionReduction()).isZero();
  }

  // (b) gauge-fixing part: s(s Psi) = 0 by nilpotency
  TensorExpr sPsi = sOfGaugeFermion(covariantGaugeFixing());
  TensorExpr ssPsi = slopeOperator(sPsi);
  rep.fermionPartPass = ssPsi.isZero();

  rep.pass = rep.gaugePartPass && rep.fermionPartPass;
  return rep;
}

} // namespace vpd
