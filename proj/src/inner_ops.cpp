#include "vpdiff/inner_ops.hpp"

#include "vpdiff/trace_ideal.hpp"

namespace vpd {

namespace {

bool commutesWithNabla(const FieldSymbol& f) {
  switch (f.kind) {
    case FieldKind::MetricEta:
    case FieldKind::MomentumK:
    case FieldKind::MomentumSmallK:
    case FieldKind::NablaOp:
    case FieldKind::BrstTheta:
    case FieldKind::BrstThetaPrime:
    case FieldKind::GammaMatrix:
      return true;
    default:
      return false;
  }
}

} // namespace

TensorExpr normalOrderInnerOps(const TensorExpr& e) {
  std::vector<TensorMonomial> pending(e.terms.begin(), e.terms.end());
  TensorExpr done;
  while (!pending.empty()) {
    TensorMonomial m = std::move(pending.back());
    pending.pop_back();
    bool acted = false;
    for (size_t i = 0; i + 1 < m.factors.size(); ++i) {
      if (m.factors[i].kind != FieldKind::NablaOp) continue;
      const FieldSymbol& next = m.factors[i + 1];
      if (next.kind == FieldKind::NablaOp) continue;
      if (commutesWithNabla(next)) {
        std::swap(m.factors[i], m.factors[i + 1]);
        pending.push_back(std::move(m));
      } else {
        // nab X = X nab + (nab X)
        TensorMonomial swap = m;
        std::swap(swap.factors[i], swap.factors[i + 1]);
        TensorMonomial act = m;
        IndexSlot slot = act.factors[i].indices[0];
        act.factors.erase(act.factors.begin() + i);
        act.factors[i].derivs.push_back(slot);
        pending.push_back(std::move(swap));
        pending.push_back(std::move(act));
      }
      acted = true;
      break;
    }
    if (!acted) done.terms.push_back(std::move(m));
  }
  return canonicalize(done);
}

TensorExpr opMul(const TensorExpr& a, const TensorExpr& b) {
  return normalOrderInnerOps(rawMul(a, b));
}

TensorExpr gaugeOperatorScalar() {
  IndexSlot ga = up(Space::Inner, "#go");
  ga.dummy = true;
  IndexSlot gd = dn(Space::Inner, "#go");
  gd.dummy = true;
  return TensorExpr::fromFactors(
      {makeField(FieldKind::GaugeA, {dn(Space::Spacetime, "mu"), ga}), nablaOp(gd)});
}

TensorExpr gaugeOperatorVector() {
  TensorExpr diag = mul(gaugeOperatorScalar(),
                        TensorExpr::fromFactors({metric(up(Space::Inner, "al"),
                                                        dn(Space::Inner, "be"))}));
  FieldSymbol endoA = makeField(FieldKind::GaugeA,
                                {dn(Space::Spacetime, "mu"), up(Space::Inner, "al")});
  endoA.derivs.push_back(dn(Space::Inner, "be"));
  return sub(diag, TensorExpr::fromFactors({endoA}));
}

namespace {

TensorExpr renameEndo(const TensorExpr& x, const std::string& alTo, const std::string& beTo) {
  return renameFreeIndices(x, {{"al", alTo}, {"be", beTo}});
}

} // namespace

TensorExpr endoCompose(const TensorExpr& x, const TensorExpr& y) {
  TensorExpr xr = renameEndo(x, "al", "#ch");
  TensorExpr yr = renameEndo(y, "#ch2", "be");
  TensorExpr prod = opMul(xr, yr);
  return contractWithMetric(prod, dn(Space::Inner, "#ch"), up(Space::Inner, "#ch2"));
}

TensorExpr endoTrace(const TensorExpr& x) {
  return contractWithMetric(x, up(Space::Inner, "al"), dn(Space::Inner, "be"));
}

TensorExpr fieldStrengthOpFromGauge(bool vectorRep) {
  TensorExpr aMu = vectorRep ? gaugeOperatorVector() : gaugeOperatorScalar();
  TensorExpr aNu = renameFreeIndices(aMu, {{"mu", "nu"}});
  TensorExpr dMuANu = leibnizDerivative(aNu, dn(Space::Spacetime, "mu"));
  TensorExpr dNuAMu = leibnizDerivative(aMu, dn(Space::Spacetime, "nu"));
  TensorExpr comm = vectorRep ? sub(endoCompose(aMu, aNu), endoCompose(aNu, aMu))
                              : sub(opMul(aMu, aNu), opMul(aNu, aMu));
  return normalOrderInnerOps(add(sub(dMuANu, dNuAMu), comm));
}

TensorExpr fieldStrengthOpScalar() {
  IndexSlot ga = up(Space::Inner, "#fo");
  ga.dummy = true;
  IndexSlot gd = dn(Space::Inner, "#fo");
  gd.dummy = true;
  return TensorExpr::fromFactors(
      {makeField(FieldKind::FieldStrengthF,
                 {dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"), ga}),
       nablaOp(gd)});
}

TensorExpr fieldStrengthOpVector() {
  TensorExpr diag = mul(fieldStrengthOpScalar(),
                        TensorExpr::fromFactors({metric(up(Space::Inner, "al"),
                                                        dn(Space::Inner, "be"))}));
  FieldSymbol endoF = makeField(FieldKind::FieldStrengthF,
                                {dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"),
                                 up(Space::Inner, "al")});
  endoF.derivs.push_back(dn(Space::Inner, "be"));
  return sub(diag, TensorExpr::fromFactors({endoF}));
}

TensorExpr expandFieldStrength(const TensorExpr& e) {
  FieldSymbol pattern = makeField(
      FieldKind::FieldStrengthF,
      {dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"), up(Space::Inner, "al")});
  auto A = [](const char* st, const char* in, std::vector<IndexSlot> derivs = {}) {
    FieldSymbol f = makeField(FieldKind::GaugeA, {dn(Space::Spacetime, st), up(Space::Inner, in)});
    f.derivs = std::move(derivs);
    return f;
  };
  TensorExpr repl;
  repl.terms.push_back(TensorMonomial(ScalarCoeff::one(), {A("nu", "al", {dn(Space::Spacetime, "mu")})}));
  repl.terms.push_back(TensorMonomial(ScalarCoeff(Rational(-1)), {A("mu", "al", {dn(Space::Spacetime, "nu")})}));
  {
    IndexSlot beU = up(Space::Inner, "#fe");
    beU.dummy = true;
    IndexSlot beD = dn(Space::Inner, "#fe");
    beD.dummy = true;
    FieldSymbol a1 = makeField(FieldKind::GaugeA, {dn(Space::Spacetime, "mu"), beU});
    FieldSymbol a2 = A("nu", "al", {beD});
    repl.terms.push_back(TensorMonomial(ScalarCoeff::one(), {a1, a2}));
    FieldSymbol a3 = makeField(FieldKind::GaugeA, {dn(Space::Spacetime, "nu"), beU});
    FieldSymbol a4 = A("mu", "al", {beD});
    repl.terms.push_back(TensorMonomial(ScalarCoeff(Rational(-1)), {a3, a4}));
  }
  return substitute(e, pattern, repl);
}

TensorExpr regularizedInnerTrace(const TensorExpr& e) {
  TensorExpr ordered = normalOrderInnerOps(e);

  TensorExpr withMoments;
  for (const auto& t : ordered.terms) {
    std::vector<IndexSlot> opSlots;
    TensorMonomial m;
    m.coeff = t.coeff;
    for (const auto& f : t.factors) {
      if (f.kind == FieldKind::NablaOp)
        opSlots.push_back(f.indices[0]);
      else
        m.factors.push_back(f);
    }
    if (opSlots.size() % 2 == 1) continue; // odd moments vanish
    if (opSlots.empty()) {
      m.coeff.mulConst(SymConst::MomentVol, 1);
    } else if (opSlots.size() == 2) {
      m.coeff.mulConst(SymConst::Omega1L, 1);
      m.coeff.mulConst(SymConst::Lambda, -2);
      m.factors.push_back(metric(opSlots[0], opSlots[1]));
    } else {
      throw Error("regularizedInnerTrace: operator strings beyond rank two are unsupported");
    }
    withMoments.terms.push_back(std::move(m));
  }

  ReductionOptions opt;
  opt.ibpInner = true;
  opt.ibpSpacetime = true;
  opt.divergenceFree = {FieldKind::GaugeA, FieldKind::FieldStrengthF, FieldKind::GhostOmega};
  return reduceModulo(withMoments, opt);
}

TensorExpr classicalFieldStrengthSquare() {
  TensorExpr f1 = TensorExpr::fromFactors(
      {makeField(FieldKind::FieldStrengthF,
                 {dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"), up(Space::Inner, "al")})});
  TensorExpr f2 = TensorExpr::fromFactors(
      {makeField(FieldKind::FieldStrengthF,
                 {up(Space::Spacetime, "mu2"), up(Space::Spacetime, "nu2"), dn(Space::Inner, "al2")})});
  TensorExpr ff = mul(f1, f2);
  ff = contract(ff, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu2"));
  ff = contract(ff, dn(Space::Spacetime, "nu"), up(Space::Spacetime, "nu2"));
  ff = contract(ff, up(Space::Inner, "al"), dn(Space::Inner, "al2"));
  return ff;
}

} // namespace vpd
