#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vpdiff/rational.hpp"

using vpd::Rational;

TEST_CASE("lowest terms and arithmetic") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(-2, -4) == Rational(1, 2));
  CHECK(Rational(2, -4) == Rational(-1, 2));
  CHECK((Rational(1, 12) + Rational(1, 24)) == Rational(1, 8));
  CHECK((Rational(1, 2) * Rational(2, 3)) == Rational(1, 3));
  CHECK((Rational(1, 2) / Rational(1, 4)) == Rational(2));
  CHECK((Rational(1, 3) - Rational(1, 3)).isZero());
}

TEST_CASE("parse and print") {
  CHECK(Rational::parse("-11/3").str() == "-11/3");
  CHECK(Rational::parse("7").str() == "7");
  CHECK(Rational::parse("4/8").str() == "1/2");
  CHECK_THROWS(Rational::parse("x"));
}

TEST_CASE("ledger-scale arithmetic stays exact") {
  // 44/12 - 24/12 ... style sums
  Rational bracket = Rational(44) + Rational(24) - Rational(90) - Rational(2);
  CHECK(bracket == Rational(-24));
  CHECK((bracket / Rational(12)) == Rational(-2));
  Rational c = Rational(1, 720) * Rational(1, 64); // 1/(720*64)
  CHECK(c == Rational(1, 46080));
}

TEST_CASE("factorial") {
  CHECK(Rational::factorial(0) == Rational(1));
  CHECK(Rational::factorial(5) == Rational(120));
}
