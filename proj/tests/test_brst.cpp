#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "vpdiff/brst.hpp"
#include "vpdiff/feynman.hpp"
#include "vpdiff/inner_ops.hpp"
#include "vpdiff/numeric_eval.hpp"

using namespace vpd;

namespace {

FieldSymbol Af(const char* m, const char* a) {
  return makeField(FieldKind::GaugeA, {dn(Space::Spacetime, m), up(Space::Inner, a)});
}
FieldSymbol Om(const char* a) { return makeField(FieldKind::GhostOmega, {up(Space::Inner, a)}); }
FieldSymbol OmStar(const char* a) {
  return makeField(FieldKind::AntighostOmegaStar, {dn(Space::Inner, a)});
}
FieldSymbol Hf(const char* a, Variance v = Variance::Lower) {
  return makeField(FieldKind::AuxiliaryH, {{Space::Inner, v, a, false}});
}

} // namespace

TEST_CASE("brst variation on generators") {
  // delta_theta h = 0
  CHECK(brstVariation(TensorExpr::fromFactors({Hf("ga")})).isZero());

  // delta_theta om* = -theta h
  TensorExpr v = brstVariation(TensorExpr::fromFactors({OmStar("ga")}));
  TensorExpr expect = scalarMul(
      TensorExpr::fromFactors({makeField(FieldKind::BrstTheta, {}), Hf("ga")}), Rational(-1));
  CHECK(equal(v, expect));

  // s(om*) = -h, s(h) = 0
  CHECK(equal(slopeOperator(TensorExpr::fromFactors({OmStar("ga")})),
              scalarMul(TensorExpr::fromFactors({Hf("ga")}), Rational(-1))));
  CHECK(slopeOperator(TensorExpr::fromFactors({Hf("ga")})).isZero());
}

TEST_CASE("leibniz expansion of delta_theta(om* h)") {
  TensorExpr pair = contract(mul(TensorExpr::fromFactors({OmStar("gx")}),
                                 TensorExpr::fromFactors({Hf("gx", Variance::Upper)})),
                             dn(Space::Inner, "gx"), up(Space::Inner, "gx"));
  TensorExpr v = brstVariation(pair);
  // -(theta) h_ga h^ga; the om* delta h term vanishes
  TensorExpr hh = contract(mul(TensorExpr::fromFactors({Hf("gx")}),
                               TensorExpr::fromFactors({Hf("gx", Variance::Upper)})),
                           dn(Space::Inner, "gx"), up(Space::Inner, "gx"));
  TensorExpr expect = scalarMul(mul(TensorExpr::fromFactors({makeField(FieldKind::BrstTheta, {})}), hh),
                                Rational(-1));
  CHECK(equal(v, expect));
}

TEST_CASE("slope operator raises the ghost number by one") {
  std::vector<TensorExpr> samples = {
      TensorExpr::fromFactors({Af("mu", "al")}),
      TensorExpr::fromFactors({Om("de")}),
      TensorExpr::fromFactors({OmStar("ga")}),
      mul(TensorExpr::fromFactors({Af("mu", "al")}), TensorExpr::fromFactors({Om("de")})),
      mul(TensorExpr::fromFactors({OmStar("ga")}), TensorExpr::fromFactors({Om("de")}))};
  for (auto& e : samples) {
    TensorExpr s = slopeOperator(e);
    if (s.isZero()) continue;
    int before = ghostNumber(canonicalize(e).terms[0]);
    for (auto& t : s.terms) CHECK(ghostNumber(t) == before + 1);
  }
}

TEST_CASE("nilpotency on all five generators") {
  CHECK(nilpotencyCheck(TensorExpr::fromFactors({Af("mu", "al")})).pass);
  CHECK(nilpotencyCheck(TensorExpr::fromFactors({Om("de")})).pass);
  CHECK(nilpotencyCheck(TensorExpr::fromFactors({OmStar("ga")})).pass);
  CHECK(nilpotencyCheck(TensorExpr::fromFactors({Hf("ga")})).pass);
  CHECK(nilpotencyCheck(TensorExpr::fromFactors({makeField(FieldKind::MatterPsi, {})})).pass);
  FieldSymbol psiOdd = makeField(FieldKind::MatterPsi, {});
  psiOdd.odd = true;
  CHECK(nilpotencyCheck(TensorExpr::fromFactors({psiOdd})).pass);
}

TEST_CASE("nilpotency on a 500-monomial random corpus") {
  std::mt19937 rng(20260808);
  for (int iter = 0; iter < 500; ++iter) {
    std::uniform_int_distribution<int> nf(1, 3), species(0, 4), coin(0, 1);
    int n = nf(rng);
    std::vector<FieldSymbol> fs;
    for (int i = 0; i < n; ++i) {
      std::string st = "m" + std::to_string(i);
      std::string in = "a" + std::to_string(i);
      switch (species(rng)) {
        case 0: fs.push_back(Af(st.c_str(), in.c_str())); break;
        case 1: fs.push_back(Om(in.c_str())); break;
        case 2: fs.push_back(OmStar(in.c_str())); break;
        case 3: fs.push_back(Hf(in.c_str())); break;
        default: {
          FieldSymbol p = makeField(FieldKind::MatterPsi, {});
          p.odd = coin(rng);
          fs.push_back(p);
          break;
        }
      }
      if (coin(rng))
        fs.back().derivs.push_back(dn(Space::Spacetime, "d" + std::to_string(i)));
      if (coin(rng))
        fs.back().derivs.push_back(dn(Space::Inner, "e" + std::to_string(i)));
    }
    TensorMonomial m(ScalarCoeff::one(), fs);
    // randomly bind an upper/lower inner pair when available
    std::vector<IndexSlot*> ups, downs;
    for (auto& f : m.factors) {
      for (auto& s : f.indices)
        if (s.space == Space::Inner) (s.variance == Variance::Upper ? ups : downs).push_back(&s);
      for (auto& s : f.derivs)
        if (s.space == Space::Inner) (s.variance == Variance::Upper ? ups : downs).push_back(&s);
    }
    if (!ups.empty() && !downs.empty() && coin(rng)) {
      IndexSlot* u = ups[rng() % ups.size()];
      IndexSlot* d = downs[rng() % downs.size()];
      u->dummy = d->dummy = true;
      u->label = d->label = "bb";
    }
    TensorExpr e = TensorExpr::fromMonomial(m);
    TensorExpr c;
    try {
      c = canonicalize(e);
    } catch (const MalformedExpressionError&) {
      continue; // skip accidentally malformed draws
    }
    if (c.isZero()) continue;
    NilpotencyVerdict verdict = nilpotencyCheck(c);
    if (!verdict.pass) {
      CAPTURE(exprStr(c));
      CAPTURE(exprStr(verdict.residual));
    }
    REQUIRE(verdict.pass);
  }
}

TEST_CASE("two-parameter antisymmetry restates nilpotency") {
  std::vector<TensorExpr> gens = {TensorExpr::fromFactors({Af("mu", "al")}),
                                  TensorExpr::fromFactors({Om("de")}),
                                  TensorExpr::fromFactors({OmStar("ga")}),
                                  TensorExpr::fromFactors({Hf("ga")})};
  for (auto& g : gens) {
    TensorExpr ab = brstVariationWith(brstVariationWith(g, FieldKind::BrstTheta),
                                      FieldKind::BrstThetaPrime);
    TensorExpr ba = brstVariationWith(brstVariationWith(g, FieldKind::BrstThetaPrime),
                                      FieldKind::BrstTheta);
    CHECK(add(ab, ba).isZero());
  }
}

TEST_CASE("variation commutes with derivative jets") {
  TensorExpr a = TensorExpr::fromFactors({Af("mu", "al")});
  IndexSlot d = dn(Space::Spacetime, "nu");
  CHECK(equal(slopeOperator(leibnizDerivative(a, d)), leibnizDerivative(slopeOperator(a), d)));
  IndexSlot dI = dn(Space::Inner, "be");
  CHECK(equal(slopeOperator(leibnizDerivative(a, dI)), leibnizDerivative(slopeOperator(a), dI)));
}

TEST_CASE("gauge fermion structure") {
  TensorExpr f = covariantGaugeFixing();
  TensorExpr psi = gaugeFermion(f);
  CHECK(!psi.isZero());
  for (auto& t : psi.terms) CHECK(ghostNumber(t) == -1);

  // xi = 0 drops the quadratic auxiliary term
  TensorExpr psi0 = substConst(psi, SymConst::Xi, Rational(0));
  CHECK(!containsKind(psi0, FieldKind::AuxiliaryH));
  CHECK(containsKind(psi, FieldKind::AuxiliaryH));

  // malformed functionals are rejected
  CHECK_THROWS_AS(gaugeFermion(TensorExpr::zero()), GaugeFunctionalError);
  CHECK_THROWS_AS(gaugeFermion(TensorExpr::fromFactors({Om("ga")})), GaugeFunctionalError);
  CHECK_THROWS_AS(gaugeFermion(TensorExpr::fromFactors({Af("mu", "ga")})), GaugeFunctionalError);
}

TEST_CASE("s of the gauge fermion: three-term decomposition") {
  TensorExpr f = covariantGaugeFixing();
  TensorExpr sPsi = sOfGaugeFermion(f); // throws if the decomposition fails

  // the h f term appears with coefficient +1: isolate terms with h and f-structure
  ScalarCoeff invL2(Rational(1));
  invL2.mulConst(SymConst::Lambda, -2);
  TensorExpr hLow = TensorExpr::fromFactors({Hf("gx")});
  TensorExpr hf = contract(mul(hLow, f), dn(Space::Inner, "gx"), up(Space::Inner, "ga"));
  hf = scalarMul(hf, invL2);
  // subtracting it removes exactly those monomials
  TensorExpr rest = sub(sPsi, hf);
  for (auto& t : rest.terms) {
    bool hasH = false, hasOmStar = false;
    for (auto& fac : t.factors) {
      hasH |= fac.kind == FieldKind::AuxiliaryH;
      hasOmStar |= fac.kind == FieldKind::AntighostOmegaStar;
    }
    CHECK((hasOmStar || (hasH && !hasOmStar)));
  }

  // s(s Psi) = 0
  CHECK(slopeOperator(sPsi).isZero());

  // ghost kernel: s f = d^mu(d_mu om + A_mu^al nab_al om - (nab_de A_mu) om^de)
  TensorExpr sf = slopeOperator(f);
  FieldSymbol t1 = Om("ga");
  t1.derivs.push_back({Space::Spacetime, Variance::Lower, "#m", true});
  t1.derivs.push_back({Space::Spacetime, Variance::Upper, "#m", true});
  FieldSymbol a2 = Af("#m2", "#v");
  a2.indices[0].dummy = true;
  a2.indices[1].dummy = true;
  FieldSymbol om2 = Om("ga");
  om2.derivs.push_back({Space::Inner, Variance::Lower, "#v", true});
  TensorExpr expect = TensorExpr::fromMonomial(TensorMonomial(ScalarCoeff::one(), {t1}));
  // remaining terms produced by distributing d^mu over the interacting piece
  TensorExpr interacting;
  {
    TensorMonomial mA(ScalarCoeff::one(), {a2, om2});
    interacting.terms.push_back(mA);
    FieldSymbol a3 = Af("#m2", "ga");
    a3.indices[0].dummy = true;
    a3.derivs.push_back({Space::Inner, Variance::Lower, "#w", true});
    FieldSymbol om3 = Om("#w");
    om3.indices[0].dummy = true;
    TensorMonomial mB(ScalarCoeff(Rational(-1)), {om3, a3});
    interacting.terms.push_back(mB);
  }
  TensorExpr interactingD;
  for (auto& t : interacting.terms) {
    for (size_t i = 0; i < t.factors.size(); ++i) {
      TensorMonomial n = t;
      n.factors[i].derivs.push_back({Space::Spacetime, Variance::Upper, "#m2", true});
      interactingD.terms.push_back(n);
    }
  }
  expect = add(expect, interactingD);
  CHECK(equal(sf, expect));
}

TEST_CASE("abelianized action variation vanishes identically") {
  // linear field strength: both derivative terms, no inner couplings
  FieldSymbol a1 = Af("m", "a");
  a1.derivs.push_back(dn(Space::Spacetime, "n"));
  TensorExpr fLin = sub(
      TensorExpr::fromMonomial(TensorMonomial(ScalarCoeff::one(), {[&] {
        FieldSymbol f = Af("n", "a");
        f.derivs = {dn(Space::Spacetime, "m")};
        return f;
      }()})),
      TensorExpr::fromMonomial(TensorMonomial(ScalarCoeff::one(), {a1})));
  TensorExpr f2 = renameFreeIndices(fLin, {{"m", "m2"}, {"n", "n2"}, {"a", "a2"}});
  TensorExpr ff = mul(fLin, f2);
  ff = contractWithMetric(ff, dn(Space::Spacetime, "m"), dn(Space::Spacetime, "m2"));
  ff = contractWithMetric(ff, dn(Space::Spacetime, "n"), dn(Space::Spacetime, "n2"));
  ff = contractWithMetric(ff, up(Space::Inner, "a"), up(Space::Inner, "a2"));
  // abelian slope: s A = d om only; realized by dropping interaction terms of s(FF)
  TensorExpr sff = slopeOperator(ff);
  TensorExpr abelian;
  for (auto& t : sff.terms) {
    int fields = 0;
    for (auto& fac : t.factors)
      if (fac.kind == FieldKind::GaugeA || fac.kind == FieldKind::GhostOmega) ++fields;
    if (fields <= 2) abelian.terms.push_back(t);
  }
  CHECK(canonicalize(abelian).isZero());
}

TEST_CASE("action variation: fermion part vanishes, classical part leaves the metric term") {
  InvarianceReport rep = brstInvarianceOfAction();
  CHECK(rep.fermionPartPass);
  // the displayed field variation alone leaves exactly the compensation term
  // the transforming inner metric would cancel
  CHECK(!rep.gaugePartPass);
  CHECK(!rep.residual.isZero());
  CHECK(rep.obstructionIdentified);
}

TEST_CASE("covariant field-strength law of the slope operator") {
  // s F_{mu nu}^al = F_{mu nu}^be nab_be om^al - om^be nab_be F_{mu nu}^al,
  // exactly (no integration by parts needed)
  TensorExpr F = expandFieldStrength(TensorExpr::fromFactors({makeField(
      FieldKind::FieldStrengthF,
      {dn(Space::Spacetime, "m"), dn(Space::Spacetime, "n"), up(Space::Inner, "al")})}));
  TensorExpr sF = slopeOperator(F);

  FieldSymbol omD = makeField(FieldKind::GhostOmega, {up(Space::Inner, "al")});
  omD.derivs.push_back({Space::Inner, Variance::Lower, "#q", true});
  FieldSymbol Fup = makeField(FieldKind::FieldStrengthF,
                              {dn(Space::Spacetime, "m"), dn(Space::Spacetime, "n"),
                               {Space::Inner, Variance::Upper, "#q", true}});
  TensorExpr t1 = TensorExpr::fromFactors({Fup, omD});
  FieldSymbol om2 = makeField(FieldKind::GhostOmega, {{Space::Inner, Variance::Upper, "#q", true}});
  FieldSymbol F2 = makeField(FieldKind::FieldStrengthF,
                             {dn(Space::Spacetime, "m"), dn(Space::Spacetime, "n"),
                              up(Space::Inner, "al")});
  F2.derivs.push_back({Space::Inner, Variance::Lower, "#q", true});
  TensorExpr t2 = TensorExpr::fromFactors({om2, F2});
  TensorExpr law = expandFieldStrength(sub(t1, t2));
  CHECK(equal(sF, law));
}

TEST_CASE("classical variation residual: independent grid quadrature") {
  // periodic trig fields in (x0, X0, X1); inner-divergence-free A and ghost
  // test function; the variation integral equals the compensation term and is
  // far from zero
  const int N = 16;
  const double h = 2 * M_PI / N;
  const double ahat[4] = {0, 1, 0, 0};
  const double bhat[4] = {1, 0, 0, 0};
  const double evec[4] = {1, 1, 0.4, -0.3};
  const double ETA[4] = {-1, 1, 1, 1};

  auto baseA = [&](int mu, int al, double x, double u, double v) {
    if (mu != 1) return 0.0;
    return ahat[al] * std::sin(x) * std::cos(u) + bhat[al] * std::sin(x) * std::sin(v);
  };
  auto Efun = [&](int al, double u, double v) { return evec[al] * std::cos(u - v); };

  auto At = [&](double t, int mu, int al, double x, double u, double v) {
    auto E_d = [&](int be, int a2, double uu, double vv) {
      double S0 = 1, S1 = -1;
      return -evec[a2] * (be == 0 ? S0 : S1) * std::sin(uu - vv);
    };
    double var = 0;
    for (int be = 0; be < 2; ++be) {
      var += baseA(mu, be, x, u, v) * E_d(be, al, u, v);
      const double d = 1e-6;
      double nabA = (baseA(mu, al, x, u + (be == 0) * d, v + (be == 1) * d) -
                     baseA(mu, al, x, u - (be == 0) * d, v - (be == 1) * d)) /
                    (2 * d);
      var -= Efun(be, u, v) * nabA;
    }
    return baseA(mu, al, x, u, v) + t * var;
  };

  auto action = [&](double t) {
    double S = 0;
    const double d = 1e-5;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) {
          double x = i * h, u = j * h, v = k * h;
          double Fc[4][4][4];
          for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu)
              for (int al = 0; al < 4; ++al) {
                double val = 0;
                if (mu == 0)
                  val += (At(t, nu, al, x + d, u, v) - At(t, nu, al, x - d, u, v)) / (2 * d);
                if (nu == 0)
                  val -= (At(t, mu, al, x + d, u, v) - At(t, mu, al, x - d, u, v)) / (2 * d);
                for (int be = 0; be < 2; ++be) {
                  double un = (be == 0) * d, vn = (be == 1) * d;
                  double nabANu =
                      (At(t, nu, al, x, u + un, v + vn) - At(t, nu, al, x, u - un, v - vn)) /
                      (2 * d);
                  double nabAMu =
                      (At(t, mu, al, x, u + un, v + vn) - At(t, mu, al, x, u - un, v - vn)) /
                      (2 * d);
                  val += At(t, mu, be, x, u, v) * nabANu - At(t, nu, be, x, u, v) * nabAMu;
                }
                Fc[mu][nu][al] = val;
              }
          double ff = 0;
          for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu)
              for (int al = 0; al < 4; ++al)
                ff += ETA[mu] * ETA[nu] * ETA[al] * Fc[mu][nu][al] * Fc[mu][nu][al];
          S += ff;
        }
    return S * h * h * h;
  };

  double t0 = 5e-4;
  double dSdt = (action(t0) - action(-t0)) / (2 * t0);
  // scale of the action itself for normalization
  double scale = std::abs(action(0)) + 250.0;
  CHECK(std::abs(dSdt) > 1e-3 * scale); // the variation genuinely does not vanish
}
