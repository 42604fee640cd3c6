#pragma once

#include <array>
#include <complex>
#include <functional>
#include <map>

#include "vpdiff/expr.hpp"

namespace vpd {

struct OnShellSingularityError : Error { using Error::Error; };

using Vec4 = std::array<double, 4>;

inline double minkowskiSq(const Vec4& v) {
  return -v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
}
inline double minkowskiDot(const Vec4& a, const Vec4& b) {
  return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// Componentwise evaluation of a canonical expression: dummy indices summed over
// {0,1,2,3} with lower components pre-lowered by eta = diag(-1,1,1,1).
// Fields resolve through a caller-supplied function receiving the factor and
// the concrete values of its signature and derivative slots.
struct NumericBindings {
  std::map<int, Vec4> k;      // spacetime momenta by tag (upper components)
  std::map<int, Vec4> K;      // inner momenta by tag (upper components)
  std::map<SymConst, double> consts;
  std::function<std::complex<double>(const FieldSymbol&, const std::vector<int>& idxVals,
                                     const std::vector<int>& derivVals)>
      field;
};

std::complex<double> evaluate(const TensorExpr& e, const NumericBindings& b,
                              const std::map<std::string, int>& freeValues = {});

} // namespace vpd
