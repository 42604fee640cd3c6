#pragma once

#include <stdexcept>
#include <string>

namespace vpd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexSpaceError : Error { using Error::Error; };
struct VarianceError : Error { using Error::Error; };
struct MalformedExpressionError : Error { using Error::Error; };
struct SubstitutionError : Error { using Error::Error; };
struct OpenSpinorLineError : Error { using Error::Error; };
struct InternalSignError : Error { using Error::Error; };
struct UnknownFieldError : Error { using Error::Error; };

enum class Space { Spacetime, Inner, GaugeAlgebra, Spinor };
enum class Variance { Upper, Lower };

inline char spaceLetter(Space s) {
  switch (s) {
    case Space::Spacetime: return 's';
    case Space::Inner: return 'i';
    case Space::GaugeAlgebra: return 'g';
    case Space::Spinor: return 'p';
  }
  return '?';
}

inline Space spaceFromLetter(char c) {
  switch (c) {
    case 's': return Space::Spacetime;
    case 'i': return Space::Inner;
    case 'g': return Space::GaugeAlgebra;
    case 'p': return Space::Spinor;
  }
  throw MalformedExpressionError(std::string("unknown index space letter: ") + c);
}

// One index position. Dummy (bound) slots carry a label shared by exactly one
// partner slot in the same monomial; canonical dummy labels start with '!'.
struct IndexSlot {
  Space space = Space::Spacetime;
  Variance variance = Variance::Lower;
  std::string label;
  bool dummy = false;

  bool operator==(const IndexSlot& o) const {
    return space == o.space && variance == o.variance && label == o.label && dummy == o.dummy;
  }

  std::string str() const {
    std::string s;
    s += spaceLetter(space);
    s += variance == Variance::Upper ? '+' : '-';
    s += label;
    if (dummy) s += '*';
    return s;
  }
};

inline IndexSlot up(Space sp, std::string label) { return {sp, Variance::Upper, std::move(label), false}; }
inline IndexSlot dn(Space sp, std::string label) { return {sp, Variance::Lower, std::move(label), false}; }

inline Variance flip(Variance v) { return v == Variance::Upper ? Variance::Lower : Variance::Upper; }

} // namespace vpd
