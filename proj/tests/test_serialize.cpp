#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vpdiff/serialize.hpp"

using namespace vpd;

namespace {

TensorExpr sampleExpr() {
  TensorExpr ff = mul(
      TensorExpr::fromFactors({makeField(FieldKind::FieldStrengthF,
                                         {dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"),
                                          up(Space::Inner, "al")})}),
      TensorExpr::fromFactors({makeField(FieldKind::FieldStrengthF,
                                         {up(Space::Spacetime, "mu"), up(Space::Spacetime, "nu"),
                                          dn(Space::Inner, "al2")})}));
  ff = contract(ff, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu"));
  ff = contract(ff, dn(Space::Spacetime, "nu"), up(Space::Spacetime, "nu"));
  ff = contract(ff, up(Space::Inner, "al"), dn(Space::Inner, "al2"));
  ScalarCoeff c(Rational(-11, 3));
  c.mulConst(SymConst::Omega4, 1);
  c.mulConst(SymConst::InvEps, 1);
  c.mulConst(SymConst::Omega1L, 1);
  c.mulConst(SymConst::Lambda, -2);
  return scalarMul(ff, c);
}

} // namespace

TEST_CASE("round-trip is exact") {
  TensorExpr e = sampleExpr();
  std::string s1 = printExpr(e);
  TensorExpr p = parseExpr(s1);
  CHECK(equal(e, p));
  CHECK(printExpr(p) == s1);
}

TEST_CASE("printing is canonical: equal expressions print identically") {
  TensorExpr a = sampleExpr();
  // same content built in a different order
  TensorExpr b = add(scalarMul(sampleExpr(), Rational(1, 2)),
                     scalarMul(sampleExpr(), Rational(1, 2)));
  CHECK(printExpr(a) == printExpr(b));
}

TEST_CASE("coefficient species survive the trip") {
  ScalarCoeff c(Rational(5, 7));
  c.mulI(1);
  c.mulConst(SymConst::Xi, 2);
  c.mulMomSq({false, 3, true}, -1);
  c.mulMomSq({true, 2, false}, -1);
  TensorExpr e = TensorExpr::scalar(c);
  TensorExpr p = parseExpr(printExpr(e));
  CHECK(equal(e, p));
}

TEST_CASE("odd factors and derivative slots survive the trip") {
  FieldSymbol om = makeField(FieldKind::GhostOmega, {up(Space::Inner, "de")});
  om.derivs.push_back(dn(Space::Spacetime, "mu"));
  FieldSymbol th = makeField(FieldKind::BrstTheta, {});
  TensorExpr e = TensorExpr::fromFactors({th, om});
  TensorExpr p = parseExpr(printExpr(e));
  CHECK(equal(e, p));
  CHECK(printExpr(p) == printExpr(e));
}

TEST_CASE("parse errors are loud") {
  CHECK_THROWS_AS(parseExpr("(sum (t (c 1"), MalformedExpressionError);
  CHECK_THROWS_AS(parseExpr("(sum (t (c 1) (f nosuch 0 (x) (d))))"), UnknownFieldError);
}

TEST_CASE("frozen golden form") {
  // the canonical print of a fixed expression is part of the interface
  TensorExpr ff = mul(
      TensorExpr::fromFactors({makeField(FieldKind::FieldStrengthF,
                                         {dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "nu"),
                                          up(Space::Inner, "al")})}),
      TensorExpr::fromFactors({makeField(FieldKind::FieldStrengthF,
                                         {up(Space::Spacetime, "mu"), up(Space::Spacetime, "nu"),
                                          dn(Space::Inner, "al2")})}));
  ff = contract(ff, dn(Space::Spacetime, "mu"), up(Space::Spacetime, "mu"));
  ff = contract(ff, dn(Space::Spacetime, "nu"), up(Space::Spacetime, "nu"));
  ff = contract(ff, up(Space::Inner, "al"), dn(Space::Inner, "al2"));
  std::string golden =
      "(sum\n (t (c 1) (f F 0 (x s+ !m0 * s+ !m1 * i+ !a0 *) (d)) "
      "(f F 0 (x s- !m0 * s- !m1 * i- !a0 *) (d))))\n";
  CHECK(printExpr(ff) == golden);
}
