#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracle_helpers.hpp"
#include "vpdiff/expr.hpp"
#include "vpdiff/numeric_eval.hpp"

using namespace vpd;

namespace {

TensorExpr F(const char* mu, const char* nu, const char* al, Variance vmu = Variance::Lower,
             Variance vnu = Variance::Lower, Variance val = Variance::Upper) {
  return TensorExpr::fromFactors({makeField(
      FieldKind::FieldStrengthF,
      {{Space::Spacetime, vmu, mu, false}, {Space::Spacetime, vnu, nu, false},
       {Space::Inner, val, al, false}})});
}

} // namespace

TEST_CASE("metric contraction basics") {
  // eta_{mu nu} eta^{nu rho} -> delta_mu^rho
  TensorExpr e = mul(TensorExpr::fromFactors({metric(dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"))}),
                     TensorExpr::fromFactors({metric(up(Space::Spacetime, "nu"), up(Space::Spacetime, "rho"))}));
  TensorExpr c = contract(e, dn(Space::Spacetime, "nu"), up(Space::Spacetime, "nu"));
  TensorExpr expect = TensorExpr::fromFactors({metric(dn(Space::Spacetime, "mu"), up(Space::Spacetime, "rho"))});
  CHECK(equal(c, expect));

  // eta_{mu nu} traced -> 4
  TensorExpr tr = contract(
      TensorExpr::fromFactors({metric(dn(Space::Spacetime, "mu"), up(Space::Spacetime, "nu"))}),
      dn(Space::Spacetime, "mu"), up(Space::Spacetime, "nu"));
  CHECK(equal(tr, TensorExpr::scalar(Rational(4))));

  // inner-space metric self-contraction is 4 as well
  TensorExpr tri = contract(
      TensorExpr::fromFactors({metric(dn(Space::Inner, "al"), up(Space::Inner, "be"))}),
      dn(Space::Inner, "al"), up(Space::Inner, "be"));
  CHECK(equal(tri, TensorExpr::scalar(Rational(4))));
}

TEST_CASE("contract error paths") {
  TensorExpr e = TensorExpr::fromFactors(
      {metric(dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"))});
  CHECK_THROWS_AS(contract(e, dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu")),
                  VarianceError);
  TensorExpr e2 = mul(TensorExpr::fromFactors({momentumk(1, up(Space::Spacetime, "mu"))}),
                      TensorExpr::fromFactors({momentumK(1, dn(Space::Inner, "al"))}));
  CHECK_THROWS_AS(contract(e2, up(Space::Spacetime, "mu"), dn(Space::Inner, "al")),
                  IndexSpaceError);
}

TEST_CASE("F antisymmetry via canonicalizer, numeric cross-check") {
  // F_{mu nu} F^{nu mu} (free product) fully contracted -> -F_{mu nu} F^{mu nu}
  TensorExpr prod = mul(F("mu", "nu", "al", Variance::Lower, Variance::Lower, Variance::Upper),
                        F("nu", "mu", "al2", Variance::Upper, Variance::Upper, Variance::Lower));
  TensorExpr bound = contract(prod, dn(Space::Spacetime, "nu"), up(Space::Spacetime, "nu"));
  bound = contract(bound, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu"));
  bound = contract(bound, up(Space::Inner, "al"), dn(Space::Inner, "al2"));

  TensorExpr ref = mul(F("mu", "nu", "al"), F("mu", "nu", "al2", Variance::Upper, Variance::Upper,
                                              Variance::Lower));
  ref = contract(ref, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu"));
  ref = contract(ref, dn(Space::Spacetime, "nu"), up(Space::Spacetime, "nu"));
  ref = contract(ref, up(Space::Inner, "al"), dn(Space::Inner, "al2"));
  ref = scalarMul(ref, Rational(-1));
  CHECK(equal(bound, ref));

  // componentwise on random antisymmetric arrays
  oracle::RandomFields fields(1234);
  NumericBindings nb;
  nb.field = std::ref(fields);
  auto lhs = evaluate(bound, nb);
  auto rhs = evaluate(ref, nb);
  CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
  CHECK(std::abs(lhs) > 1e-8); // non-vacuous
}

TEST_CASE("odd factors anticommute") {
  auto om = [](const char* l) {
    return makeField(FieldKind::GhostOmega, {up(Space::Inner, l)});
  };
  TensorExpr a = TensorExpr::fromFactors({om("be"), om("ga")});
  TensorExpr b = TensorExpr::fromFactors({om("ga"), om("be")});
  CHECK(add(a, b).isZero());
  CHECK(!sub(a, b).isZero());
  // omega^be omega^be = 0
  TensorExpr sq = TensorExpr::fromFactors({om("be"), om("be")});
  CHECK(canonicalize(sq).isZero());
}

TEST_CASE("linearity and merge") {
  TensorExpr eta = TensorExpr::fromFactors({metric(dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"))});
  TensorExpr e = add(scalarMul(eta, Rational(2)), scalarMul(eta, Rational(-1)));
  e = add(e, scalarMul(eta, Rational(-1)));
  CHECK(e.isZero());
}

TEST_CASE("theta reorder tracks the permutation signature") {
  FieldSymbol theta = makeField(FieldKind::BrstTheta, {});
  FieldSymbol om = makeField(FieldKind::GhostOmega, {up(Space::Inner, "be")});
  TensorExpr to = TensorExpr::fromFactors({theta, om});
  TensorExpr ot = TensorExpr::fromFactors({om, theta});
  CHECK(equal(to, scalarMul(ot, Rational(-1))));
  // theta^2 = 0
  CHECK(canonicalize(TensorExpr::fromFactors({theta, theta})).isZero());
}

TEST_CASE("free-index mismatch rejected") {
  TensorExpr a = TensorExpr::fromFactors({metric(dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"))});
  TensorExpr b = TensorExpr::fromFactors({metric(dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "rho"))});
  TensorExpr bad;
  bad.terms = a.terms;
  bad.terms.insert(bad.terms.end(), b.terms.begin(), b.terms.end());
  CHECK_THROWS_AS(canonicalize(bad), MalformedExpressionError);
}

TEST_CASE("leibniz rule") {
  // nabla_al (A_mu^be omega^ga) -> (nabla A) omega + A (nabla omega)
  TensorExpr e = TensorExpr::fromFactors(
      {makeField(FieldKind::GaugeA, {dn(Space::Spacetime, "mu"), up(Space::Inner, "be")}),
       makeField(FieldKind::GhostOmega, {up(Space::Inner, "ga")})});
  TensorExpr d = leibnizDerivative(e, dn(Space::Inner, "al"));
  CHECK(d.terms.size() == 2);

  // derivative of a constant monomial vanishes
  TensorExpr c = TensorExpr::scalar(Rational(3));
  CHECK(leibnizDerivative(c, dn(Space::Spacetime, "mu")).isZero());
  TensorExpr km = TensorExpr::fromFactors({momentumk(1, up(Space::Spacetime, "nu"))});
  CHECK(leibnizDerivative(km, dn(Space::Spacetime, "mu")).isZero());

  // parity bookkeeping: d(omst_ga om^ga) carries no relative sign between the
  // two terms (the derivative is Grassmann-even)
  TensorExpr pair = TensorExpr::fromFactors(
      {makeField(FieldKind::AntighostOmegaStar, {dn(Space::Inner, "ga")}),
       makeField(FieldKind::GhostOmega, {up(Space::Inner, "ga")})});
  TensorExpr pairB = contract(pair, dn(Space::Inner, "ga"), up(Space::Inner, "ga"));
  TensorExpr dp = leibnizDerivative(pairB, dn(Space::Spacetime, "mu"));
  CHECK(dp.terms.size() == 2);
  CHECK(dp.terms[0].coeff.rat == dp.terms[1].coeff.rat);
}

TEST_CASE("substitution") {
  // B_mu -> -2 calA_mu applied to B_mu B^mu gives 4 calA_mu calA^mu
  FieldSymbol pat = makeField(FieldKind::GenericB, {dn(Space::Spacetime, "mu")});
  TensorExpr rep = scalarMul(
      TensorExpr::fromFactors({makeField(FieldKind::GenericCalA, {dn(Space::Spacetime, "mu")})}),
      Rational(-2));
  TensorExpr bb = mul(TensorExpr::fromFactors({makeField(FieldKind::GenericB, {dn(Space::Spacetime, "mu")})}),
                      TensorExpr::fromFactors({makeField(FieldKind::GenericB, {up(Space::Spacetime, "mu")})}));
  bb = contract(bb, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu"));
  TensorExpr got = substitute(bb, pat, rep);

  TensorExpr aa = mul(TensorExpr::fromFactors({makeField(FieldKind::GenericCalA, {dn(Space::Spacetime, "mu")})}),
                      TensorExpr::fromFactors({makeField(FieldKind::GenericCalA, {up(Space::Spacetime, "mu")})}));
  aa = contract(aa, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu"));
  CHECK(equal(got, scalarMul(aa, Rational(4))));

  // identity substitution
  TensorExpr same = substitute(bb, pat, TensorExpr::fromFactors({pat}));
  CHECK(equal(same, bb));

  // signature mismatch rejected
  TensorExpr bad = TensorExpr::fromFactors({makeField(FieldKind::GenericC, {})});
  CHECK_THROWS_AS(substitute(bb, pat, bad), SubstitutionError);
}

TEST_CASE("substitution distributes derivative jets") {
  // C -> X Y (product); occurrence carries a derivative: d(C) -> (dX)Y + X(dY)
  FieldSymbol pat = makeField(FieldKind::GenericC, {});
  TensorExpr rep = mul(TensorExpr::fromFactors({makeField(FieldKind::GenericM, {})}),
                       TensorExpr::fromFactors({makeField(FieldKind::GenericN, {})}));
  FieldSymbol cWithDeriv = makeField(FieldKind::GenericC, {});
  cWithDeriv.derivs.push_back(dn(Space::Spacetime, "mu"));
  TensorExpr e = TensorExpr::fromFactors({cWithDeriv});
  TensorExpr got = substitute(e, pat, rep);
  CHECK(got.terms.size() == 2);
}

TEST_CASE("gamma traces") {
  auto gam = [](const char* mu, const char* r, const char* c, Variance v = Variance::Upper) {
    IndexSlot row{Space::Spinor, Variance::Lower, r, true};
    IndexSlot col{Space::Spinor, Variance::Upper, c, true};
    return makeField(FieldKind::GammaMatrix, {{Space::Spacetime, v, mu, false}, row, col});
  };
  // tr(gamma^mu gamma^nu) = 4 eta^{mu nu}
  TensorExpr two = TensorExpr::fromFactors({gam("mu", "a", "b"), gam("nu", "b", "a")});
  TensorExpr t2 = gammaTrace(two);
  CHECK(equal(t2, scalarMul(TensorExpr::fromFactors({metric(up(Space::Spacetime, "mu"),
                                                            up(Space::Spacetime, "nu"))}),
                            Rational(4))));
  // tr(gamma^mu) = 0
  TensorExpr one = TensorExpr::fromFactors({gam("mu", "a", "a")});
  CHECK(gammaTrace(one).isZero());

  // open line rejected
  FieldSymbol open = gam("mu", "a", "b");
  open.indices[1].dummy = false;
  open.indices[2].dummy = false;
  CHECK_THROWS_AS(gammaTrace(TensorExpr::fromFactors({open})), OpenSpinorLineError);
}

TEST_CASE("quartic gamma trace against explicit Dirac matrices") {
  // (1/4) F_{mu nu} F_{rho si} tr(gamma^mu gamma^nu gamma^rho gamma^si) = -2 F.F
  auto gam = [](const char* mu, const char* r, const char* c) {
    IndexSlot row{Space::Spinor, Variance::Lower, r, true};
    IndexSlot col{Space::Spinor, Variance::Upper, c, true};
    return makeField(FieldKind::GammaMatrix, {up(Space::Spacetime, mu), row, col});
  };
  auto Ff = [](const char* a, const char* b) {
    return makeField(FieldKind::FieldStrengthF,
                     {dn(Space::Spacetime, a), dn(Space::Spacetime, b), up(Space::Inner, "al")});
  };
  TensorExpr e = TensorExpr::fromFactors(
      {Ff("mu", "nu"), Ff("rho", "si"), gam("mu", "a", "b"), gam("nu", "b", "c"),
       gam("rho", "c", "d"), gam("si", "d", "a")},
      ScalarCoeff(1, 4));
  // F carries a spare free inner index on each factor; contract them pairwise
  TensorExpr e2 = e;
  e2.terms[0].factors[1].indices[2] = dn(Space::Inner, "al2");
  e2 = contract(e2, up(Space::Inner, "al"), dn(Space::Inner, "al2"));
  e2 = contract(e2, up(Space::Spacetime, "mu"), dn(Space::Spacetime, "mu"));
  e2 = contract(e2, up(Space::Spacetime, "nu"), dn(Space::Spacetime, "nu"));
  e2 = contract(e2, up(Space::Spacetime, "rho"), dn(Space::Spacetime, "rho"));
  e2 = contract(e2, up(Space::Spacetime, "si"), dn(Space::Spacetime, "si"));
  TensorExpr traced = gammaTrace(e2);

  TensorExpr ff = mul(F("mu", "nu", "al"),
                      F("mu", "nu", "al2", Variance::Upper, Variance::Upper, Variance::Lower));
  ff = contract(ff, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu"));
  ff = contract(ff, dn(Space::Spacetime, "nu"), up(Space::Spacetime, "nu"));
  ff = contract(ff, up(Space::Inner, "al"), dn(Space::Inner, "al2"));
  CHECK(equal(traced, scalarMul(ff, Rational(-2))));

  // numeric: explicit 4x4 matrices with random antisymmetric F
  oracle::DiracMatrices dm;
  oracle::RandomFields fields(77);
  std::complex<double> acc = 0;
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu)
      for (int rho = 0; rho < 4; ++rho)
        for (int si = 0; si < 4; ++si)
          for (int al = 0; al < 4; ++al) {
            // F_{mu nu}^{al} F_{rho si}_{al}; slots lowered inside the oracle
            FieldSymbol f1 = makeField(FieldKind::FieldStrengthF,
                                       {dn(Space::Spacetime, "x"), dn(Space::Spacetime, "y"),
                                        up(Space::Inner, "z")});
            FieldSymbol f2 = makeField(FieldKind::FieldStrengthF,
                                       {dn(Space::Spacetime, "x"), dn(Space::Spacetime, "y"),
                                        dn(Space::Inner, "z")});
            auto v1 = fields(f1, {mu, nu, al}, {});
            auto v2 = fields(f2, {rho, si, al}, {});
            acc += 0.25 * v1 * v2 * dm.trace({mu, nu, rho, si});
          }
  // the same contraction through the symbolic trace and through -2 F.F
  NumericBindings nb;
  nb.field = std::ref(fields);
  auto ref = evaluate(scalarMul(ff, Rational(-2)), nb);
  auto sym = evaluate(traced, nb);
  CHECK(std::abs(sym - ref) <= 1e-10 * (1.0 + std::abs(ref)));
  CHECK(std::abs(acc - ref) <= 1e-10 * (1.0 + std::abs(ref)));
}

TEST_CASE("canonicalize idempotent and rename-invariant on random corpus") {
  std::mt19937 rng(2024);
  oracle::RandomFields fields(555);
  NumericBindings nb;
  nb.field = std::ref(fields);

  int numericChecked = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    // random monomial: 1-3 even tensor factors with some contractions
    std::uniform_int_distribution<int> nf(1, 3), pick(0, 2), lab(0, 3);
    int n = nf(rng);
    std::vector<FieldSymbol> fs;
    std::vector<IndexSlot*> slots;
    for (int i = 0; i < n; ++i) {
      int w = pick(rng);
      if (w == 0)
        fs.push_back(makeField(FieldKind::FieldStrengthF,
                               {dn(Space::Spacetime, "p" + std::to_string(i * 4)),
                                dn(Space::Spacetime, "p" + std::to_string(i * 4 + 1)),
                                up(Space::Inner, "q" + std::to_string(i))}));
      else if (w == 1)
        fs.push_back(makeField(FieldKind::GaugeA,
                               {dn(Space::Spacetime, "p" + std::to_string(i * 4)),
                                up(Space::Inner, "q" + std::to_string(i))}));
      else
        fs.push_back(metric(up(Space::Spacetime, "p" + std::to_string(i * 4)),
                            up(Space::Spacetime, "p" + std::to_string(i * 4 + 1))));
    }
    TensorMonomial m(ScalarCoeff(Rational(lab(rng) + 1, 3)), fs);
    // bind a random upper/lower spacetime pair if available
    std::vector<std::pair<int, int>> uppers, lowers;
    for (int fi = 0; fi < (int)m.factors.size(); ++fi)
      for (int si = 0; si < (int)m.factors[fi].indices.size(); ++si) {
        auto& s = m.factors[fi].indices[si];
        if (s.space != Space::Spacetime) continue;
        (s.variance == Variance::Upper ? uppers : lowers).push_back({fi, si});
      }
    if (!uppers.empty() && !lowers.empty() && pick(rng) != 0) {
      auto [fa, sa] = uppers[rng() % uppers.size()];
      auto [fb, sb] = lowers[rng() % lowers.size()];
      if (fa != fb || sa != sb) {
        m.factors[fa].indices[sa].dummy = true;
        m.factors[fa].indices[sa].label = "dd";
        m.factors[fb].indices[sb].dummy = true;
        m.factors[fb].indices[sb].label = "dd";
      }
    }
    TensorExpr e = TensorExpr::fromMonomial(m);
    TensorExpr c1 = canonicalize(e);
    TensorExpr c2 = canonicalize(c1);
    REQUIRE(equal(c1, c2));
    for (size_t ti = 0; ti < c1.terms.size(); ++ti)
      REQUIRE(monomialFullKey(c1.terms[ti]) == monomialFullKey(c2.terms[ti]));

    // dummy rename invariance
    int counter = 100;
    TensorExpr renamed;
    for (auto& t : e.terms) renamed.terms.push_back(renameDummies(t, "zz", counter));
    REQUIRE(equal(canonicalize(renamed), c1));

    // numeric invariance (even sector)
    if (numericChecked < 200 && !c1.isZero()) {
      std::map<std::string, int> freeVals;
      bool ok = true;
      for (auto& s : freeSlots(c1.terms[0])) {
        if (freeVals.count(s.label)) continue;
        freeVals[s.label] = (int)(rng() % 4);
      }
      try {
        auto v1 = evaluate(e, nb, freeVals);
        auto v2 = evaluate(c1, nb, freeVals);
        REQUIRE(std::abs(v1 - v2) <= 1e-12 * (1.0 + std::abs(v1)));
        ++numericChecked;
      } catch (const Error&) {
        ok = false;
      }
      (void)ok;
    }
  }
  CHECK(numericChecked >= 100);
}

TEST_CASE("sum order invariance") {
  TensorExpr a = TensorExpr::fromFactors({makeField(FieldKind::GenericC, {})});
  TensorExpr b = scalarMul(TensorExpr::fromFactors({makeField(FieldKind::GenericM, {})}),
                           Rational(2, 3));
  CHECK(equal(add(a, b), add(b, a)));
}
