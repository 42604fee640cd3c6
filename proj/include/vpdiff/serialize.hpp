#pragma once

#include <string>

#include "vpdiff/expr.hpp"

namespace vpd {

// Deterministic prefix text form with exact round-trip.
//
//   expr   := (sum term*)
//   term   := (t coeff factor*)
//   coeff  := (c RAT [i] [sym NAME POW]* [msq k|K TAG [e] POW]*)
//   factor := (f NAME TAG [odd] [gh N] (x slot*) (d slot*))
//   slot   := SPACEVAR LABEL [*]     e.g.  s+ mu   i- !a0 *
//
// Canonicalized expressions print identically iff they are equal.
std::string printExpr(const TensorExpr& e);
TensorExpr parseExpr(const std::string& text);

} // namespace vpd
