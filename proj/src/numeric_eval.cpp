#include "vpdiff/numeric_eval.hpp"

#include <cmath>
#include <set>
#include <vector>

namespace vpd {

namespace {

constexpr double kEta[4] = {-1.0, 1.0, 1.0, 1.0};

double momentumComponent(const Vec4& v, int idx, Variance var) {
  return var == Variance::Upper ? v[idx] : kEta[idx] * v[idx];
}

struct SlotValue {
  int value = -1;
};

} // namespace

std::complex<double> evaluate(const TensorExpr& e, const NumericBindings& b,
                              const std::map<std::string, int>& freeValues) {
  std::complex<double> total = 0.0;
  for (const auto& t : e.terms) {
    // coefficient
    std::complex<double> cval = t.coeff.rat.toDouble();
    if (t.coeff.iPow) cval *= std::complex<double>(0.0, 1.0);
    for (auto& [s, n] : t.coeff.pows) {
      auto it = b.consts.find(s);
      if (it == b.consts.end()) throw Error("evaluate: no value bound for constant");
      cval *= std::pow(it->second, n);
    }
    for (auto& [m, n] : t.coeff.momsq) {
      const auto& table = m.inner ? b.K : b.k;
      auto it = table.find(m.tag);
      if (it == table.end()) throw Error("evaluate: no momentum bound for squared symbol");
      double sq = minkowskiSq(it->second);
      if (std::abs(sq) < 1e-14 && n < 0)
        throw OnShellSingularityError("evaluate: vanishing momentum square in denominator");
      cval *= std::pow(sq, n);
    }

    // dummy labels in this term
    std::set<std::string> dummies;
    for (auto& f : t.factors) {
      for (auto& s : f.indices)
        if (s.dummy) dummies.insert(s.label);
      for (auto& s : f.derivs)
        if (s.dummy) dummies.insert(s.label);
    }
    std::vector<std::string> dl(dummies.begin(), dummies.end());

    std::map<std::string, int> assign = freeValues;
    std::complex<double> termSum = 0.0;
    long long combos = 1;
    for (size_t i = 0; i < dl.size(); ++i) combos *= 4;
    for (long long c = 0; c < combos; ++c) {
      long long rem = c;
      for (auto& lab : dl) {
        assign[lab] = rem % 4;
        rem /= 4;
      }
      std::complex<double> prod = 1.0;
      bool dead = false;
      for (auto& f : t.factors) {
        auto slotVal = [&](const IndexSlot& s) -> int {
          auto it = assign.find(s.label);
          if (it == assign.end())
            throw Error("evaluate: unbound free index '" + s.label + "'");
          return it->second;
        };
        switch (f.kind) {
          case FieldKind::MetricEta: {
            int a = slotVal(f.indices[0]);
            int bidx = slotVal(f.indices[1]);
            bool mixed = f.indices[0].variance != f.indices[1].variance;
            double v;
            if (mixed)
              v = a == bidx ? 1.0 : 0.0;
            else
              v = a == bidx ? kEta[a] : 0.0;
            prod *= v;
            break;
          }
          case FieldKind::MomentumK:
          case FieldKind::MomentumSmallK: {
            const auto& table = f.kind == FieldKind::MomentumK ? b.K : b.k;
            auto it = table.find(f.tag);
            if (it == table.end()) throw Error("evaluate: unbound momentum tag");
            prod *= momentumComponent(it->second, slotVal(f.indices[0]), f.indices[0].variance);
            break;
          }
          case FieldKind::NablaOp:
            throw Error("evaluate: nabla operator factor is not numerically evaluatable");
          default: {
            if (!b.field) throw Error("evaluate: field callback not provided");
            std::vector<int> iv, dv;
            for (auto& s : f.indices) iv.push_back(slotVal(s));
            for (auto& s : f.derivs) dv.push_back(slotVal(s));
            prod *= b.field(f, iv, dv);
            break;
          }
        }
        if (prod == std::complex<double>(0.0, 0.0)) {
          dead = true;
          break;
        }
      }
      if (!dead) termSum += prod;
    }
    total += cval * termSum;
  }
  return total;
}

} // namespace vpd
