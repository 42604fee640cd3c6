#include "vpdiff/expr.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>

namespace vpd {

FieldKind kindFromName(const std::string& s) {
  static const std::map<std::string, FieldKind> table = {
      {"A", FieldKind::GaugeA},         {"om", FieldKind::GhostOmega},
      {"omst", FieldKind::AntighostOmegaStar}, {"h", FieldKind::AuxiliaryH},
      {"psi", FieldKind::MatterPsi},    {"F", FieldKind::FieldStrengthF},
      {"B", FieldKind::GenericB},       {"C", FieldKind::GenericC},
      {"M", FieldKind::GenericM},       {"N", FieldKind::GenericN},
      {"E", FieldKind::GenericE},       {"calA", FieldKind::GenericCalA},
      {"K", FieldKind::MomentumK},      {"k", FieldKind::MomentumSmallK},
      {"eta", FieldKind::MetricEta},    {"gam", FieldKind::GammaMatrix},
      {"nab", FieldKind::NablaOp},      {"th", FieldKind::BrstTheta},
      {"thp", FieldKind::BrstThetaPrime}};
  auto it = table.find(s);
  if (it == table.end()) throw UnknownFieldError("unknown field kind: " + s);
  return it->second;
}

namespace {

constexpr int kMaxVariants = 200000;

struct SlotRef {
  int factor;
  bool deriv;
  int pos;
};

using SlotMap = std::map<std::string, std::vector<SlotRef>>; // dummy label -> occurrences

IndexSlot& slotAt(TensorMonomial& m, const SlotRef& r) {
  return r.deriv ? m.factors[r.factor].derivs[r.pos] : m.factors[r.factor].indices[r.pos];
}
const IndexSlot& slotAt(const TensorMonomial& m, const SlotRef& r) {
  return r.deriv ? m.factors[r.factor].derivs[r.pos] : m.factors[r.factor].indices[r.pos];
}

SlotMap dummyMap(const TensorMonomial& m) {
  SlotMap map;
  for (int f = 0; f < (int)m.factors.size(); ++f) {
    const auto& fac = m.factors[f];
    for (int i = 0; i < (int)fac.indices.size(); ++i)
      if (fac.indices[i].dummy) map[fac.indices[i].label].push_back({f, false, i});
    for (int i = 0; i < (int)fac.derivs.size(); ++i)
      if (fac.derivs[i].dummy) map[fac.derivs[i].label].push_back({f, true, i});
  }
  return map;
}

void validateDummies(const TensorMonomial& m) {
  for (auto& [label, occ] : dummyMap(m)) {
    if (occ.size() != 2)
      throw MalformedExpressionError("dummy label '" + label + "' occurs " +
                                     std::to_string(occ.size()) + " times");
    const IndexSlot& a = slotAt(m, occ[0]);
    const IndexSlot& b = slotAt(m, occ[1]);
    if (a.space != b.space)
      throw MalformedExpressionError("dummy label '" + label + "' spans index spaces");
    if ((a.space == Space::Spacetime || a.space == Space::Inner) && a.variance == b.variance)
      throw MalformedExpressionError("dummy label '" + label + "' repeats variance");
  }
}

bool isConstantFactor(const FieldSymbol& f) {
  switch (f.kind) {
    case FieldKind::MetricEta:
    case FieldKind::MomentumK:
    case FieldKind::MomentumSmallK:
    case FieldKind::NablaOp:
    case FieldKind::BrstTheta:
    case FieldKind::BrstThetaPrime:
      return true;
    default:
      return false;
  }
}

// metric absorption, metric traces, momentum squares; returns false if the
// monomial vanished
bool simplifyFactors(TensorMonomial& m) {
  bool changed = true;
  while (changed) {
    changed = false;
    SlotMap dm = dummyMap(m);

    // eta self-trace and eta absorption
    for (int f = 0; f < (int)m.factors.size() && !changed; ++f) {
      auto& fac = m.factors[f];
      if (fac.kind != FieldKind::MetricEta) continue;
      const IndexSlot s0 = fac.indices[0];
      const IndexSlot s1 = fac.indices[1];
      if (s0.dummy && s1.dummy && s0.label == s1.label) {
        m.coeff = m.coeff * ScalarCoeff(Rational(4));
        m.factors.erase(m.factors.begin() + f);
        changed = true;
        break;
      }
      for (int side = 0; side < 2 && !changed; ++side) {
        const IndexSlot& own = side == 0 ? s0 : s1;
        const IndexSlot& other = side == 0 ? s1 : s0;
        if (!own.dummy) continue;
        auto& occ = dm[own.label];
        for (const auto& ref : occ) {
          if (ref.factor == f && !ref.deriv && (ref.pos == side)) continue;
          // rewrite partner slot to the metric's other slot
          IndexSlot& partner = slotAt(m, ref);
          partner.label = other.label;
          partner.variance = other.variance;
          partner.dummy = other.dummy;
          m.factors.erase(m.factors.begin() + f);
          changed = true;
          break;
        }
      }
    }
    if (changed) continue;

    // momentum squares: same-kind same-tag momenta joined by a dummy pair
    for (int f = 0; f < (int)m.factors.size() && !changed; ++f) {
      auto& fa = m.factors[f];
      if (fa.kind != FieldKind::MomentumK && fa.kind != FieldKind::MomentumSmallK) continue;
      if (!fa.indices[0].dummy) continue;
      for (int g = f + 1; g < (int)m.factors.size(); ++g) {
        auto& fb = m.factors[g];
        if (fb.kind != fa.kind || fb.tag != fa.tag) continue;
        if (!fb.indices[0].dummy || fb.indices[0].label != fa.indices[0].label) continue;
        MomSq ms{fa.kind == FieldKind::MomentumK, fa.tag, false};
        m.coeff.mulMomSq(ms, 1);
        m.factors.erase(m.factors.begin() + g);
        m.factors.erase(m.factors.begin() + f);
        changed = true;
        break;
      }
    }

    // antisymmetric slot pair contracted with itself -> 0
    for (auto& fac : m.factors) {
      if (fac.kind != FieldKind::FieldStrengthF) continue;
      if (fac.indices[0].dummy && fac.indices[1].dummy &&
          fac.indices[0].label == fac.indices[1].label)
        return false;
    }
  }
  return !m.coeff.isZero();
}

std::string slotKey(const IndexSlot& s, bool maskDummy) {
  std::string k;
  k += spaceLetter(s.space);
  // a spacetime/inner dummy pair may sit either way up (flat metric); the
  // sorting key must not see that choice
  bool flippable = s.dummy && (s.space == Space::Spacetime || s.space == Space::Inner);
  if (!(maskDummy && flippable)) k += s.variance == Variance::Upper ? '+' : '-';
  if (s.dummy)
    k += maskDummy ? std::string("?") : s.label + "*";
  else
    k += s.label;
  return k;
}

// first traversal occurrence of every spacetime/inner dummy pair becomes Upper
void normalizeDummyVariance(TensorMonomial& m) {
  std::map<std::string, bool> firstSeenFlip; // label -> flip pair?
  auto visit = [&](IndexSlot& s) {
    if (!s.dummy || (s.space != Space::Spacetime && s.space != Space::Inner)) return;
    auto it = firstSeenFlip.find(s.label);
    if (it == firstSeenFlip.end())
      it = firstSeenFlip.emplace(s.label, s.variance == Variance::Lower).first;
    if (it->second) s.variance = flip(s.variance);
  };
  for (auto& f : m.factors) {
    for (auto& s : f.indices) visit(s);
    for (auto& s : f.derivs) visit(s);
  }
}

std::string factorKey(const FieldSymbol& f, bool maskDummy) {
  // inner-derivative operators sort after every field factor: canonical forms
  // stay normal-ordered (operators trailing, acting rightward); the BRST
  // parameters sort before everything so they end up leftmost
  std::string k = f.kind == FieldKind::NablaOp ? "~nab" : kindName(f.kind);
  if (f.kind == FieldKind::BrstTheta) k = "!0th";
  if (f.kind == FieldKind::BrstThetaPrime) k = "!1thp";
  if (f.kind == FieldKind::NablaOp) {
    k += "[";
    for (auto& s : f.indices) k += slotKey(s, maskDummy) + ",";
    k += "]";
    return k;
  }
  k += ":" + std::to_string(f.tag);
  if (f.odd) k += "~";
  if (f.ghost) k += "g" + std::to_string(f.ghost);
  k += "[";
  bool pairSym = f.kind == FieldKind::FieldStrengthF || f.kind == FieldKind::MetricEta;
  if (maskDummy && pairSym && f.indices.size() >= 2) {
    // sorting key must not depend on the (anti)symmetric slot arrangement
    std::string a = slotKey(f.indices[0], true), b = slotKey(f.indices[1], true);
    if (b < a) std::swap(a, b);
    k += a + "," + b + ",";
    for (size_t i = 2; i < f.indices.size(); ++i) k += slotKey(f.indices[i], true) + ",";
  } else {
    for (auto& s : f.indices) k += slotKey(s, maskDummy) + ",";
  }
  k += "](";
  for (auto& s : f.derivs) k += slotKey(s, maskDummy) + ",";
  k += ")";
  return k;
}

std::string canonicalDummyName(Space sp, int n) {
  std::string p;
  switch (sp) {
    case Space::Spacetime: p = "!m"; break;
    case Space::Inner: p = "!a"; break;
    case Space::GaugeAlgebra: p = "!g"; break;
    case Space::Spinor: p = "!s"; break;
  }
  return p + std::to_string(n);
}

// Canonical renaming of dummy labels by traversal order.
void renameCanonical(TensorMonomial& m) {
  std::map<std::string, std::string> rename;
  std::map<char, int> counters;
  auto visit = [&](IndexSlot& s) {
    if (!s.dummy) return;
    auto it = rename.find(s.label);
    if (it == rename.end()) {
      std::string nn = canonicalDummyName(s.space, counters[spaceLetter(s.space)]++);
      it = rename.emplace(s.label, nn).first;
    }
    s.label = it->second;
  };
  for (auto& f : m.factors) {
    for (auto& s : f.indices) visit(s);
    for (auto& s : f.derivs) visit(s);
  }
}

int signOfOddPermutation(const std::vector<int>& order, const std::vector<bool>& odd) {
  // signature of the permutation restricted to odd factors
  std::vector<int> oddSeq;
  for (int idx : order)
    if (odd[idx]) oddSeq.push_back(idx);
  int sign = 1;
  for (size_t i = 0; i < oddSeq.size(); ++i)
    for (size_t j = i + 1; j < oddSeq.size(); ++j)
      if (oddSeq[i] > oddSeq[j]) sign = -sign;
  return sign;
}

struct Variant {
  std::string key;
  int sign;
  TensorMonomial mono;
};

// Enumerate admissible factor arrangements and pick the minimal serialization.
// Returns nullopt when the monomial is identically zero.
std::optional<TensorMonomial> orderAndRename(const TensorMonomial& input) {
  TensorMonomial base = input;

  // derivative slots commute: bring every factor's derivative list into its
  // deterministic pre-order before any factor-level sorting reads it
  for (auto& fac : base.factors) {
    std::stable_sort(fac.derivs.begin(), fac.derivs.end(),
                     [](const IndexSlot& a, const IndexSlot& b) {
                       auto ka = std::make_tuple(a.dummy, a.space,
                                                 a.dummy ? Variance::Lower : a.variance,
                                                 a.dummy ? std::string() : a.label);
                       auto kb = std::make_tuple(b.dummy, b.space,
                                                 b.dummy ? Variance::Lower : b.variance,
                                                 b.dummy ? std::string() : b.label);
                       return ka < kb;
                     });
  }

  std::vector<int> movable, fixed;
  std::vector<bool> oddFlag(base.factors.size());
  for (int i = 0; i < (int)base.factors.size(); ++i) {
    oddFlag[i] = base.factors[i].odd;
    if (base.factors[i].matrixValued) {
      if (base.factors[i].odd)
        throw MalformedExpressionError("matrix-valued factors must be Grassmann-even");
      fixed.push_back(i);
    } else {
      movable.push_back(i);
    }
  }

  // sort movables by invariant key; ties enumerated
  std::stable_sort(movable.begin(), movable.end(), [&](int a, int b) {
    return factorKey(base.factors[a], true) < factorKey(base.factors[b], true);
  });
  std::vector<std::pair<int, int>> groups; // [begin,end) runs of equal keys
  for (int i = 0; i < (int)movable.size();) {
    int j = i + 1;
    while (j < (int)movable.size() &&
           factorKey(base.factors[movable[i]], true) == factorKey(base.factors[movable[j]], true))
      ++j;
    groups.emplace_back(i, j);
    i = j;
  }

  // enumeration dimensions: per-group permutations, antisymmetric slot swaps,
  // per-factor orderings of same-space dummy derivative runs
  long long variants = 1;
  for (auto& [b, e] : groups) {
    for (int n = 2; n <= e - b; ++n) variants *= n;
  }
  std::vector<std::pair<int, int>> swapFactors; // (factor, sign of the swap)
  for (int i = 0; i < (int)base.factors.size(); ++i) {
    if (base.factors[i].kind == FieldKind::FieldStrengthF) {
      swapFactors.push_back({i, -1});
      variants *= 2;
    } else if (base.factors[i].kind == FieldKind::MetricEta) {
      swapFactors.push_back({i, 1});
      variants *= 2;
    }
  }
  // dummy-deriv runs (same space+variance, both dummy) per factor
  struct DerivRun {
    int factor, begin, end;
  };
  std::vector<DerivRun> derivRuns;
  for (int i = 0; i < (int)base.factors.size(); ++i) {
    auto& ds = base.factors[i].derivs;
    for (int p = 0; p < (int)ds.size();) {
      int q = p + 1;
      while (q < (int)ds.size() && ds[q].dummy && ds[p].dummy && ds[q].space == ds[p].space)
        ++q;
      if (ds[p].dummy && q - p >= 2) {
        derivRuns.push_back({i, p, q});
        for (int n = 2; n <= q - p; ++n) variants *= n;
      }
      p = q;
    }
  }
  if (variants > kMaxVariants)
    throw MalformedExpressionError("canonicalization variant blow-up (" +
                                   std::to_string(variants) + ")");

  std::optional<Variant> best;
  std::map<std::string, int> seenSigns;
  bool vanished = false;

  // iterate over all permutation tuples
  std::vector<std::vector<int>> groupPerms(groups.size());
  std::function<void(size_t, std::vector<int>&)> recurseGroups = [&](size_t gi,
                                                                     std::vector<int>& order) {
    if (gi == groups.size()) {
      // order holds permuted movable list; now enumerate antisym + deriv runs
      std::vector<int> fullOrder = order;
      fullOrder.insert(fullOrder.end(), fixed.begin(), fixed.end());
      int permSign = signOfOddPermutation(fullOrder, oddFlag);

      int nAnti = (int)swapFactors.size();
      for (int mask = 0; mask < (1 << nAnti); ++mask) {
        int antiSign = 1;
        TensorMonomial cand;
        cand.coeff = base.coeff;
        for (int idx : fullOrder) cand.factors.push_back(base.factors[idx]);
        for (int b = 0; b < nAnti; ++b) {
          if (!(mask & (1 << b))) continue;
          auto [orig, sgn] = swapFactors[b];
          int pos = (int)(std::find(fullOrder.begin(), fullOrder.end(), orig) - fullOrder.begin());
          std::swap(cand.factors[pos].indices[0], cand.factors[pos].indices[1]);
          antiSign *= sgn;
        }
        // enumerate deriv-run permutations
        std::function<void(size_t, TensorMonomial&)> recurseRuns = [&](size_t ri,
                                                                       TensorMonomial& cur) {
          if (ri == derivRuns.size()) {
            TensorMonomial fin = cur;
            normalizeDummyVariance(fin);
            renameCanonical(fin);
            std::string key;
            for (auto& f : fin.factors) key += factorKey(f, false) + "|";
            int sign = permSign * antiSign;
            auto [it, inserted] = seenSigns.emplace(key, sign);
            if (!inserted && it->second != sign) {
              // the monomial equals its own negative
              vanished = true;
              return;
            }
            if (!best || key < best->key) best = Variant{key, sign, fin};
            return;
          }
          auto& run = derivRuns[ri];
          int orig = run.factor;
          int pos = (int)(std::find(fullOrder.begin(), fullOrder.end(), orig) - fullOrder.begin());
          std::vector<IndexSlot> slots(cur.factors[pos].derivs.begin() + run.begin,
                                       cur.factors[pos].derivs.begin() + run.end);
          std::sort(slots.begin(), slots.end(),
                    [](const IndexSlot& a, const IndexSlot& b) { return a.label < b.label; });
          do {
            TensorMonomial next = cur;
            for (int t = 0; t < (int)slots.size(); ++t)
              next.factors[pos].derivs[run.begin + t] = slots[t];
            recurseRuns(ri + 1, next);
            if (vanished) return;
          } while (std::next_permutation(slots.begin(), slots.end(),
                                         [](const IndexSlot& a, const IndexSlot& b) {
                                           return a.label < b.label;
                                         }));
        };
        recurseRuns(0, cand);
        if (vanished) return;
      }
      return;
    }
    auto [b, e] = groups[gi];
    std::vector<int> members(order.begin() + b, order.begin() + e);
    std::sort(members.begin(), members.end());
    do {
      std::copy(members.begin(), members.end(), order.begin() + b);
      recurseGroups(gi + 1, order);
      if (vanished) return;
    } while (std::next_permutation(members.begin(), members.end()));
  };

  std::vector<int> order = movable;
  recurseGroups(0, order);
  if (vanished || !best) return std::nullopt;

  TensorMonomial result = best->mono;
  if (best->sign < 0) result.coeff = -result.coeff;
  return result;
}

std::vector<IndexSlot> freeSlotsOf(const TensorMonomial& m) {
  std::vector<IndexSlot> out;
  for (auto& f : m.factors) {
    for (auto& s : f.indices)
      if (!s.dummy) out.push_back(s);
    for (auto& s : f.derivs)
      if (!s.dummy) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const IndexSlot& a, const IndexSlot& b) {
    return a.str() < b.str();
  });
  return out;
}

} // namespace

std::vector<IndexSlot> freeSlots(const TensorMonomial& m) { return freeSlotsOf(m); }

std::string monomialKey(const TensorMonomial& m) {
  std::string key;
  for (auto& f : m.factors) key += factorKey(f, false) + "|";
  return key;
}

std::string monomialFullKey(const TensorMonomial& m) {
  return monomialKey(m) + "@" + m.coeff.symbolKey();
}

TensorExpr canonicalize(const TensorExpr& e) {
  std::map<std::string, TensorMonomial> merged;
  std::optional<std::string> freeSig;
  for (const auto& t : e.terms) {
    if (t.coeff.isZero()) continue;
    TensorMonomial m = t;
    validateDummies(m);
    if (!simplifyFactors(m)) continue;
    validateDummies(m);
    auto ordered = orderAndRename(m);
    if (!ordered) continue;
    m = *ordered;
    if (m.coeff.isZero()) continue;

    std::string fsig;
    for (auto& s : freeSlotsOf(m)) fsig += s.str() + ";";
    if (!freeSig)
      freeSig = fsig;
    else if (*freeSig != fsig)
      throw MalformedExpressionError("free-index multisets differ across monomials: '" +
                                     *freeSig + "' vs '" + fsig + "'");

    std::string key = monomialFullKey(m);
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(key, m);
    } else {
      it->second.coeff.rat += m.coeff.rat;
      if (it->second.coeff.rat.isZero()) merged.erase(it);
    }
  }
  TensorExpr out;
  for (auto& [k, m] : merged) out.terms.push_back(m);
  return out;
}

TensorMonomial renameDummies(const TensorMonomial& m, const std::string& prefix, int& counter) {
  TensorMonomial r = m;
  std::map<std::string, std::string> map;
  auto visit = [&](IndexSlot& s) {
    if (!s.dummy) return;
    auto it = map.find(s.label);
    if (it == map.end()) it = map.emplace(s.label, prefix + std::to_string(counter++)).first;
    s.label = it->second;
  };
  for (auto& f : r.factors) {
    for (auto& s : f.indices) visit(s);
    for (auto& s : f.derivs) visit(s);
  }
  return r;
}

TensorExpr add(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr e = a;
  e.terms.insert(e.terms.end(), b.terms.begin(), b.terms.end());
  return canonicalize(e);
}

TensorExpr sub(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr nb = b;
  for (auto& t : nb.terms) t.coeff = -t.coeff;
  return add(a, nb);
}

TensorExpr rawMul(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr e;
  int counter = 0;
  for (const auto& ta : a.terms) {
    TensorMonomial ra = renameDummies(ta, "#L", counter);
    for (const auto& tb : b.terms) {
      TensorMonomial rb = renameDummies(tb, "#R", counter);
      TensorMonomial m;
      m.coeff = ra.coeff * rb.coeff;
      m.factors = ra.factors;
      m.factors.insert(m.factors.end(), rb.factors.begin(), rb.factors.end());
      e.terms.push_back(std::move(m));
    }
  }
  return e;
}

TensorExpr mul(const TensorExpr& a, const TensorExpr& b) { return canonicalize(rawMul(a, b)); }

TensorExpr scalarMul(const TensorExpr& a, const ScalarCoeff& c) {
  TensorExpr e = a;
  for (auto& t : e.terms) t.coeff = t.coeff * c;
  return canonicalize(e);
}

TensorExpr scalarMul(const TensorExpr& a, const Rational& r) {
  return scalarMul(a, ScalarCoeff(r));
}

bool equal(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr ca = canonicalize(a);
  TensorExpr cb = canonicalize(b);
  if (ca.terms.size() != cb.terms.size()) return false;
  for (size_t i = 0; i < ca.terms.size(); ++i) {
    if (monomialFullKey(ca.terms[i]) != monomialFullKey(cb.terms[i])) return false;
    if (ca.terms[i].coeff.rat != cb.terms[i].coeff.rat) return false;
  }
  return true;
}

TensorExpr contract(const TensorExpr& e, const IndexSlot& slotA, const IndexSlot& slotB) {
  if (slotA.space != slotB.space)
    throw IndexSpaceError("contract: slots live in different index spaces");
  if ((slotA.space == Space::Spacetime || slotA.space == Space::Inner) &&
      slotA.variance == slotB.variance)
    throw VarianceError("contract: spacetime/inner contraction requires opposite variance");

  TensorExpr out;
  int fresh = 0;
  for (const auto& t : e.terms) {
    TensorMonomial m = t;
    auto findSlot = [&](const IndexSlot& target) -> IndexSlot* {
      IndexSlot* found = nullptr;
      for (auto& f : m.factors) {
        for (auto& s : f.indices)
          if (!s.dummy && s.space == target.space && s.variance == target.variance &&
              s.label == target.label) {
            if (found) throw MalformedExpressionError("contract: ambiguous slot " + target.str());
            found = &s;
          }
        for (auto& s : f.derivs)
          if (!s.dummy && s.space == target.space && s.variance == target.variance &&
              s.label == target.label) {
            if (found) throw MalformedExpressionError("contract: ambiguous slot " + target.str());
            found = &s;
          }
      }
      return found;
    };
    IndexSlot* a = findSlot(slotA);
    IndexSlot* b = findSlot(slotB);
    if (!a || !b) throw MalformedExpressionError("contract: slot not found or not free");
    if (a == b) throw MalformedExpressionError("contract: cannot bind a slot with itself");
    std::string label = "#x" + std::to_string(fresh++);
    a->dummy = b->dummy = true;
    a->label = b->label = label;
    out.terms.push_back(std::move(m));
  }
  return canonicalize(out);
}

TensorExpr leibnizDerivative(const TensorExpr& e, const IndexSlot& slot) {
  TensorExpr out;
  for (const auto& t : e.terms) {
    for (size_t i = 0; i < t.factors.size(); ++i) {
      if (isConstantFactor(t.factors[i])) continue;
      TensorMonomial m = t;
      m.factors[i].derivs.push_back(slot);
      out.terms.push_back(std::move(m));
    }
  }
  return canonicalize(out);
}

namespace {

// product rule on a bare monomial; no canonicalization (dummy pairs may span
// factors outside this monomial while splicing)
std::vector<TensorMonomial> rawLeibniz(const TensorMonomial& m, const IndexSlot& slot) {
  std::vector<TensorMonomial> out;
  for (size_t i = 0; i < m.factors.size(); ++i) {
    if (isConstantFactor(m.factors[i])) continue;
    TensorMonomial n = m;
    n.factors[i].derivs.push_back(slot);
    out.push_back(std::move(n));
  }
  return out;
}

void substituteMonomial(const TensorMonomial& m, size_t start, const FieldSymbol& pattern,
                        const TensorExpr& replacement, int& fresh,
                        std::vector<TensorMonomial>& out) {
  for (size_t p = start; p < m.factors.size(); ++p) {
    const FieldSymbol& f = m.factors[p];
    if (f.kind != pattern.kind || f.tag != pattern.tag) continue;
    if (f.indices.size() != pattern.indices.size()) continue;
    bool spacesMatch = true;
    for (size_t i = 0; i < f.indices.size(); ++i)
      if (f.indices[i].space != pattern.indices[i].space) spacesMatch = false;
    if (!spacesMatch) continue;

    for (const auto& rterm : replacement.terms) {
      if ((grassmannParity(rterm) % 2) != (f.odd ? 1 : 0))
        throw SubstitutionError("substitute: replacement parity differs from pattern");
      TensorMonomial r = renameDummies(rterm, "#S", fresh);
      // rewrite replacement free slots carrying pattern labels to the occurrence slots
      for (size_t i = 0; i < pattern.indices.size(); ++i) {
        const IndexSlot& ps = pattern.indices[i];
        const IndexSlot& actual = f.indices[i];
        bool flipVar = ps.variance != actual.variance;
        int uses = 0;
        for (auto& rf : r.factors) {
          for (auto& s : rf.indices)
            if (!s.dummy && s.space == ps.space && s.label == ps.label) {
              s.label = actual.label;
              s.variance = flipVar ? flip(s.variance) : s.variance;
              s.dummy = actual.dummy;
              ++uses;
            }
          for (auto& s : rf.derivs)
            if (!s.dummy && s.space == ps.space && s.label == ps.label) {
              s.label = actual.label;
              s.variance = flipVar ? flip(s.variance) : s.variance;
              s.dummy = actual.dummy;
              ++uses;
            }
        }
        if (uses != 1)
          throw SubstitutionError("substitute: pattern label '" + ps.label +
                                  "' must appear exactly once free in each replacement term");
      }
      // distribute the occurrence's derivative jet over the replacement term
      std::vector<TensorMonomial> jet{r};
      for (const auto& d : f.derivs) {
        std::vector<TensorMonomial> next;
        for (const auto& jm : jet)
          for (auto& piece : rawLeibniz(jm, d)) next.push_back(std::move(piece));
        jet = std::move(next);
      }
      for (const auto& jt : jet) {
        TensorMonomial nm;
        nm.coeff = m.coeff * jt.coeff;
        nm.factors.assign(m.factors.begin(), m.factors.begin() + p);
        nm.factors.insert(nm.factors.end(), jt.factors.begin(), jt.factors.end());
        nm.factors.insert(nm.factors.end(), m.factors.begin() + p + 1, m.factors.end());
        substituteMonomial(nm, p + jt.factors.size(), pattern, replacement, fresh, out);
      }
    }
    return;
  }
  out.push_back(m);
}

} // namespace

TensorExpr substitute(const TensorExpr& e, const FieldSymbol& pattern,
                      const TensorExpr& replacement) {
  // replacement free labels must cover the pattern signature
  for (const auto& rterm : replacement.terms) {
    std::multiset<std::string> need, have;
    for (auto& s : pattern.indices) need.insert(std::string(1, spaceLetter(s.space)) + s.label);
    for (auto& s : freeSlots(rterm)) have.insert(std::string(1, spaceLetter(s.space)) + s.label);
    for (auto& n : need)
      if (!have.count(n))
        throw SubstitutionError("substitute: replacement lacks pattern index " + n);
  }
  TensorExpr out;
  int fresh = 0;
  for (const auto& t : e.terms) {
    std::vector<TensorMonomial> expanded;
    substituteMonomial(t, 0, pattern, replacement, fresh, expanded);
    for (auto& m : expanded) out.terms.push_back(std::move(m));
  }
  return canonicalize(out);
}

namespace {

// tr(gamma^{m1}..gamma^{mL}) expansions as (rational, metric factors) pairs;
// raw combinatorics, no canonicalization: the slots may pair with factors
// outside the chain.
void gammaChainTraceRaw(const std::vector<IndexSlot>& mus, const Rational& pref,
                        std::vector<FieldSymbol> acc,
                        std::vector<std::pair<Rational, std::vector<FieldSymbol>>>& out) {
  if (mus.empty()) {
    out.emplace_back(pref * Rational(4), std::move(acc));
    return;
  }
  if (mus.size() % 2 == 1) return; // odd chains vanish
  for (size_t j = 1; j < mus.size(); ++j) {
    std::vector<IndexSlot> rest;
    for (size_t t = 1; t < mus.size(); ++t)
      if (t != j) rest.push_back(mus[t]);
    std::vector<FieldSymbol> acc2 = acc;
    acc2.push_back(metric(mus[0], mus[j]));
    gammaChainTraceRaw(rest, pref * Rational(j % 2 == 1 ? 1 : -1), std::move(acc2), out);
  }
}

} // namespace

TensorExpr gammaTrace(const TensorExpr& e) {
  TensorExpr out;
  for (const auto& t : e.terms) {
    std::vector<int> gammas;
    for (int i = 0; i < (int)t.factors.size(); ++i)
      if (t.factors[i].kind == FieldKind::GammaMatrix) gammas.push_back(i);
    if (gammas.empty()) {
      out.terms.push_back(t);
      continue;
    }
    // chain connectivity via spinor dummies: col (slot 2) links to row (slot 1)
    std::map<std::string, int> rowByLabel;
    for (int gi : gammas) {
      const auto& f = t.factors[gi];
      const IndexSlot& row = f.indices[1];
      const IndexSlot& col = f.indices[2];
      if (!row.dummy || !col.dummy)
        throw OpenSpinorLineError("gammaTrace: free spinor index on gamma factor");
      rowByLabel[row.label] = gi;
    }

    std::set<int> seen;
    std::vector<std::pair<Rational, std::vector<FieldSymbol>>> chainProduct{{Rational(1), {}}};
    for (int gi : gammas) {
      if (seen.count(gi)) continue;
      std::vector<IndexSlot> mus;
      int cur = gi;
      while (!seen.count(cur)) {
        seen.insert(cur);
        mus.push_back(t.factors[cur].indices[0]);
        const std::string& link = t.factors[cur].indices[2].label;
        auto nx = rowByLabel.find(link);
        if (nx == rowByLabel.end())
          throw OpenSpinorLineError("gammaTrace: spinor line not closed at " + link);
        cur = nx->second;
      }
      std::vector<std::pair<Rational, std::vector<FieldSymbol>>> chain;
      gammaChainTraceRaw(mus, Rational(1), {}, chain);
      std::vector<std::pair<Rational, std::vector<FieldSymbol>>> next;
      for (auto& [ra, fa] : chainProduct)
        for (auto& [rb, fb] : chain) {
          std::vector<FieldSymbol> fs = fa;
          fs.insert(fs.end(), fb.begin(), fb.end());
          next.emplace_back(ra * rb, std::move(fs));
        }
      chainProduct = std::move(next);
    }

    std::vector<FieldSymbol> keep;
    for (int i = 0; i < (int)t.factors.size(); ++i)
      if (t.factors[i].kind != FieldKind::GammaMatrix) keep.push_back(t.factors[i]);
    for (auto& [r, fs] : chainProduct) {
      TensorMonomial nm;
      nm.coeff = t.coeff * ScalarCoeff(r);
      nm.factors = keep;
      nm.factors.insert(nm.factors.end(), fs.begin(), fs.end());
      out.terms.push_back(std::move(nm));
    }
  }
  return canonicalize(out);
}

TensorExpr zeroMomentum(const TensorExpr& e, FieldKind kind, int tag) {
  TensorExpr out;
  for (const auto& t : e.terms) {
    bool has = false;
    for (auto& f : t.factors)
      if (f.kind == kind && f.tag == tag) has = true;
    MomSq plain{kind == FieldKind::MomentumK, tag, false};
    MomSq ieps{kind == FieldKind::MomentumK, tag, true};
    for (auto& [ms, n] : t.coeff.momsq)
      if ((ms == plain || ms == ieps) && n > 0) has = true;
    if (!has) out.terms.push_back(t);
  }
  return canonicalize(out);
}

TensorExpr permuteMomentumTags(const TensorExpr& e, const std::map<int, int>& perm) {
  TensorExpr out = e;
  for (auto& t : out.terms) {
    for (auto& f : t.factors)
      if (f.kind == FieldKind::MomentumK || f.kind == FieldKind::MomentumSmallK) {
        auto it = perm.find(f.tag);
        if (it != perm.end()) f.tag = it->second;
      }
    std::map<MomSq, int> nm;
    for (auto& [ms, n] : t.coeff.momsq) {
      MomSq m2 = ms;
      auto it = perm.find(ms.tag);
      if (it != perm.end()) m2.tag = it->second;
      nm[m2] += n;
    }
    t.coeff.momsq = std::move(nm);
  }
  return canonicalize(out);
}

TensorExpr renameFreeIndices(const TensorExpr& e, const std::map<std::string, std::string>& m) {
  TensorExpr out = e;
  for (auto& t : out.terms)
    for (auto& f : t.factors) {
      for (auto& s : f.indices)
        if (!s.dummy && m.count(s.label)) s.label = m.at(s.label);
      for (auto& s : f.derivs)
        if (!s.dummy && m.count(s.label)) s.label = m.at(s.label);
    }
  return canonicalize(out);
}

TensorExpr contractWithMetric(const TensorExpr& e, const IndexSlot& a, const IndexSlot& b) {
  if (a.space != b.space) throw IndexSpaceError("contractWithMetric: spaces differ");
  bool needMetric = (a.space == Space::Spacetime || a.space == Space::Inner) &&
                    a.variance == b.variance;
  if (!needMetric) return contract(e, a, b);
  IndexSlot m1 = {a.space, flip(a.variance), "#cw1", false};
  IndexSlot m2 = {b.space, flip(b.variance), "#cw2", false};
  TensorExpr withEta = mul(e, TensorExpr::fromFactors({metric(m1, m2)}));
  withEta = contract(withEta, a, m1);
  return contract(withEta, b, m2);
}

TensorExpr dropKind(const TensorExpr& e, FieldKind k) {
  TensorExpr out;
  for (const auto& t : e.terms) {
    bool has = false;
    for (auto& f : t.factors)
      if (f.kind == k) has = true;
    if (!has) out.terms.push_back(t);
  }
  return canonicalize(out);
}

bool containsKind(const TensorExpr& e, FieldKind k) {
  for (auto& t : e.terms)
    for (auto& f : t.factors)
      if (f.kind == k) return true;
  return false;
}

bool containsConst(const TensorExpr& e, SymConst c) {
  for (auto& t : e.terms)
    if (t.coeff.pows.count(c)) return true;
  return false;
}

std::vector<int> constPowers(const TensorExpr& e, SymConst c) {
  std::vector<int> out;
  for (auto& t : e.terms) {
    auto it = t.coeff.pows.find(c);
    out.push_back(it == t.coeff.pows.end() ? 0 : it->second);
  }
  return out;
}

int grassmannParity(const TensorMonomial& m) {
  int p = 0;
  for (auto& f : m.factors)
    if (f.odd) p ^= 1;
  return p;
}

int ghostNumber(const TensorMonomial& m) {
  int g = 0;
  for (auto& f : m.factors) g += f.ghost;
  return g;
}

std::string exprStr(const TensorExpr& e) {
  if (e.terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& t : e.terms) {
    if (!first) os << " + ";
    first = false;
    os << t.coeff.rat.str();
    if (t.coeff.iPow) os << "*i";
    for (auto& [c, n] : t.coeff.pows) os << "*" << symName(c) << "^" << n;
    for (auto& [ms, n] : t.coeff.momsq)
      os << "*" << (ms.inner ? "Ksq" : "ksq") << ms.tag << (ms.ieps ? "e" : "") << "^" << n;
    for (auto& f : t.factors) {
      os << " " << kindName(f.kind);
      if (f.tag) os << f.tag;
      os << "(";
      for (auto& s : f.indices) os << s.str() << " ";
      os << ")";
      if (!f.derivs.empty()) {
        os << "{";
        for (auto& s : f.derivs) os << s.str() << " ";
        os << "}";
      }
    }
  }
  return os.str();
}

} // namespace vpd
