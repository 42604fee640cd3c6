#include "vpdiff/heat_kernel.hpp"

#include <algorithm>
#include <cassert>
#include <mutex>

namespace vpd {

FluctuationOperatorSpec FluctuationOperatorSpec::generalBC(TensorExpr b, TensorExpr c) {
  FluctuationOperatorSpec s;
  s.form = FluctForm::GeneralBC;
  s.B = std::move(b);
  s.C = std::move(c);
  return s;
}

FluctuationOperatorSpec FluctuationOperatorSpec::generalMNC(TensorExpr m, TensorExpr n,
                                                            TensorExpr c) {
  FluctuationOperatorSpec s;
  s.form = FluctForm::GeneralMNC;
  s.M = std::move(m);
  s.N = std::move(n);
  s.Cmnc = std::move(c);
  return s;
}

FluctuationOperatorSpec FluctuationOperatorSpec::covariantAE(TensorExpr a, TensorExpr e) {
  FluctuationOperatorSpec s;
  s.form = FluctForm::CovariantAE;
  s.A = std::move(a);
  s.E = std::move(e);
  return s;
}

ReductionOptions traceReduction() {
  ReductionOptions o;
  o.cyclic = true;
  o.ibpSpacetime = true;
  return o;
}

TensorExpr cyclicCanonicalize(const TensorExpr& e) {
  ReductionOptions o;
  o.cyclic = true;
  return reduceModulo(e, o);
}

namespace {

FieldSymbol genericBFactor(const std::string& rhoLabel, bool dummy) {
  FieldSymbol f = makeField(FieldKind::GenericB, {dn(Space::Spacetime, rhoLabel)});
  f.indices[0].dummy = dummy;
  return f;
}

// ---- pole table ------------------------------------------------------------

// N(t) = 4*6*...*(4+2(t-1)): the d=4 symmetric-integration normalization
Rational symNorm(int t) {
  Rational r(1);
  for (int s = 0; s < t; ++s) r *= Rational(4 + 2 * s);
  return r;
}

// pole ratio of int (l^2)^t / (l^2 - Delta)^n relative to the basic bubble
Rational radialPoleRatio(int t, int n) {
  int j = t + 2 - n;
  if (j < 0) return Rational(0);
  return Rational::factorial(t + 1) / (Rational::factorial(n - 1) * Rational::factorial(j));
}

// simplex moment with the (n-1)! Feynman prefactor: exponents a_1..a_n
Rational feynmanMoment(const std::vector<int>& a) {
  int n = (int)a.size();
  int sum = 0;
  Rational num(1);
  for (int e : a) {
    num *= Rational::factorial(e);
    sum += e;
  }
  return Rational::factorial(n - 1) * num / Rational::factorial(n - 1 + sum);
}

struct PoleTermBuilder {
  // accumulating one monomial of the pole polynomial
  Rational coeff{1};
  std::vector<std::pair<int, int>> etaPairs;         // (slot, slot) of mu-ids, upper
  std::vector<std::pair<int, int>> extOnSlot;        // (slot, k-tag) free momentum factors
  std::vector<std::pair<int, int>> dotPairs;         // (k-tag, k-tag) contracted momenta
  std::vector<int> xExp;                             // Feynman exponents, size n
};

void emitTerm(const PoleTermBuilder& b, TensorExpr& out) {
  Rational c = b.coeff * feynmanMoment(b.xExp);
  if (c.isZero()) return;
  TensorMonomial m;
  m.coeff = ScalarCoeff(c);
  m.coeff.mulI(1);
  m.coeff.mulConst(SymConst::Omega4, 1);
  m.coeff.mulConst(SymConst::InvEps, 1);
  int dummyCounter = 0;
  for (auto& [a, bb] : b.etaPairs)
    m.factors.push_back(metric(up(Space::Spacetime, "mu" + std::to_string(a)),
                               up(Space::Spacetime, "mu" + std::to_string(bb))));
  for (auto& [slot, tag] : b.extOnSlot)
    m.factors.push_back(momentumk(tag, up(Space::Spacetime, "mu" + std::to_string(slot))));
  for (auto& [t1, t2] : b.dotPairs) {
    std::string lbl = "#d" + std::to_string(dummyCounter++);
    IndexSlot s1 = up(Space::Spacetime, lbl);
    s1.dummy = true;
    IndexSlot s2 = dn(Space::Spacetime, lbl);
    s2.dummy = true;
    m.factors.push_back(momentumk(t1, s1));
    m.factors.push_back(momentumk(t2, s2));
  }
  out.terms.push_back(std::move(m));
}

// expand one factor of Delta = Q^2 - sum_l x_l q_l^2 into (k.k) choices,
// recursing over remaining Delta powers
void expandDelta(int n, int remaining, PoleTermBuilder cur, TensorExpr& out,
                 const std::function<void(PoleTermBuilder, TensorExpr&)>& done);

// Q = sum_{l=2..n} x_l q_l, q_l = k_2 + ... + k_l: enumerate (l, m) picks
template <typename Fn>
void forEachQ(int n, Fn&& fn) {
  for (int l = 2; l <= n; ++l)
    for (int mm = 2; mm <= l; ++mm) fn(l, mm);
}

void expandDelta(int n, int remaining, PoleTermBuilder cur, TensorExpr& out,
                 const std::function<void(PoleTermBuilder, TensorExpr&)>& done) {
  if (remaining == 0) {
    done(std::move(cur), out);
    return;
  }
  // choice 1: +Q.Q
  forEachQ(n, [&](int l1, int m1) {
    forEachQ(n, [&](int l2, int m2) {
      PoleTermBuilder b = cur;
      b.xExp[l1 - 1] += 1;
      b.xExp[l2 - 1] += 1;
      b.dotPairs.push_back({m1, m2});
      expandDelta(n, remaining - 1, std::move(b), out, done);
    });
  });
  // choice 2: -x_l q_l.q_l
  for (int l = 2; l <= n; ++l)
    for (int m1 = 2; m1 <= l; ++m1)
      for (int m2 = 2; m2 <= l; ++m2) {
        PoleTermBuilder b = cur;
        b.coeff = -b.coeff;
        b.xExp[l - 1] += 1;
        b.dotPairs.push_back({m1, m2});
        expandDelta(n, remaining - 1, std::move(b), out, done);
      }
}

// all perfect matchings of the slot set
void forEachPairing(std::vector<int> slots, std::vector<std::pair<int, int>> acc,
                    const std::function<void(const std::vector<std::pair<int, int>>&)>& fn) {
  if (slots.empty()) {
    fn(acc);
    return;
  }
  int first = slots[0];
  for (size_t i = 1; i < slots.size(); ++i) {
    std::vector<int> rest;
    for (size_t j = 1; j < slots.size(); ++j)
      if (j != i) rest.push_back(slots[j]);
    auto acc2 = acc;
    acc2.push_back({first, slots[i]});
    forEachPairing(rest, acc2, fn);
  }
}

} // namespace

TensorExpr divergentMomentumIntegral(int r, int n) {
  if (n < 1 || n > 4) throw DomainError("divergentMomentumIntegral: n must be 1..4");
  if (r < 0 || r > 2 * n) throw DomainError("divergentMomentumIntegral: rank exceeds 2n");
  TensorExpr out;
  if (n == 1) return out; // scaleless: no logarithmic pole
  if (r + 4 - 2 * n < 0) return out; // convergent

  std::vector<int> all(r);
  for (int i = 0; i < r; ++i) all[i] = i + 1;

  for (int mask = 0; mask < (1 << r); ++mask) {
    std::vector<int> loopSlots, extSlots;
    for (int i = 0; i < r; ++i)
      ((mask >> i) & 1 ? loopSlots : extSlots).push_back(i + 1);
    if (loopSlots.size() % 2) continue;
    int t = (int)loopSlots.size() / 2;
    Rational radial = radialPoleRatio(t, n);
    if (radial.isZero()) continue;
    int deltaPow = t + 2 - n;

    forEachPairing(loopSlots, {},
                   [&](const std::vector<std::pair<int, int>>& pairing) {
      PoleTermBuilder base;
      base.coeff = radial / symNorm(t);
      base.etaPairs = pairing;
      base.xExp.assign(n, 0);

      // distribute (-Q) over the external slots
      std::function<void(size_t, PoleTermBuilder)> extRec = [&](size_t idx, PoleTermBuilder cur) {
        if (idx == extSlots.size()) {
          expandDelta(n, deltaPow, std::move(cur), out,
                      [](PoleTermBuilder done, TensorExpr& o) { emitTerm(done, o); });
          return;
        }
        forEachQ(n, [&](int l, int mm) {
          PoleTermBuilder b = cur;
          b.coeff = -b.coeff;
          b.xExp[l - 1] += 1;
          b.extOnSlot.push_back({extSlots[idx], mm});
          extRec(idx + 1, std::move(b));
        });
      };
      extRec(0, base);
    });
  }
  return canonicalize(out);
}

// ---- log-trace expansion ----------------------------------------------------

namespace {

// order-n integrand with generic coefficients; string positions carried as tags
TensorExpr expandLogTraceGeneric(int n) {
  TensorExpr sum;
  for (int mask = 0; mask < (1 << n); ++mask) {
    // bit j set: position j+1 carries B (i B_rho p_j^rho), else C
    std::vector<int> bPositions;
    for (int j = 0; j < n; ++j)
      if ((mask >> j) & 1) bPositions.push_back(j + 1);

    // expand each B's momentum over {p} + {k_2..k_j}
    std::function<void(size_t, TensorMonomial)> rec = [&](size_t bi, TensorMonomial cur) {
      if (bi == bPositions.size()) {
        // assemble factors in string order, then momenta
        sum.terms.push_back(std::move(cur));
        return;
      }
      int pos = bPositions[bi];
      for (int choice = 0; choice <= pos - 2 + 1; ++choice) {
        // choice 0: loop momentum p; choice c>=1: external k_{c+1}
        TensorMonomial m = cur;
        std::string lbl = "#r" + std::to_string(pos);
        int tag = choice == 0 ? kLoopMomentumTag : choice + 1;
        // bind rho_pos on the B factor at string position pos
        for (auto& f : m.factors)
          if (f.kind == FieldKind::GenericB && f.tag == pos) {
            f.indices[0].dummy = true;
            f.indices[0].label = lbl;
          }
        IndexSlot ms = up(Space::Spacetime, lbl);
        ms.dummy = true;
        m.factors.push_back(momentumk(tag, ms));
        m.coeff.mulI(1);
        rec(bi + 1, std::move(m));
      }
    };

    TensorMonomial seed;
    seed.coeff = ScalarCoeff::one();
    for (int j = 1; j <= n; ++j) {
      if ((mask >> (j - 1)) & 1)
        seed.factors.push_back([&] {
          FieldSymbol f = genericBFactor("rho", false);
          f.tag = j;
          return f;
        }());
      else
        seed.factors.push_back([&] {
          FieldSymbol f = makeField(FieldKind::GenericC, {});
          f.tag = j;
          return f;
        }());
    }
    for (int j = 1; j <= n; ++j) seed.coeff.mulMomSq({false, kDenominatorTagBase + j, false}, -1);
    rec(0, std::move(seed));
  }

  return canonicalize(sum);
}

// the string-position tags collapse through substitution of the concrete
// coefficient expressions
TensorExpr substituteCoefficients(TensorExpr e, const FluctuationOperatorSpec& spec, int maxPos) {
  for (int j = 1; j <= maxPos; ++j) {
    FieldSymbol patB = genericBFactor("rho", false);
    patB.tag = j;
    FieldSymbol patC = makeField(FieldKind::GenericC, {});
    patC.tag = j;
    e = substitute(e, patB, spec.B);
    e = substitute(e, patC, spec.C);
  }
  return e;
}

} // namespace

TensorExpr expandLogTrace(const FluctuationOperatorSpec& spec, int n) {
  if (spec.form != FluctForm::GeneralBC)
    throw FormMismatchError("expandLogTrace: operator must be in GeneralBC form");
  if (n <= 0) throw DomainError("expandLogTrace: order must be positive");
  if (n > 4)
    throw FiniteOrderNotice("expandLogTrace: orders above four are ultraviolet finite");
  return substituteCoefficients(expandLogTraceGeneric(n), spec, n);
}

// ---- divergent trace assembly ----------------------------------------------

namespace {

// replace momentum factors and squares by derivatives on the string factors:
// k_m^mu -> i d^mu on the matrix factor at string position m
TensorExpr momentaToDerivatives(const TensorExpr& e) {
  TensorExpr out;
  for (const auto& t : e.terms) {
    TensorMonomial m;
    m.coeff = t.coeff;
    std::vector<FieldSymbol> fields;   // matrix-valued string, in order
    std::vector<FieldSymbol> momenta;  // external k factors
    for (const auto& f : t.factors) {
      if (f.kind == FieldKind::MomentumSmallK) {
        if (f.tag == kLoopMomentumTag)
          throw Error("momentaToDerivatives: loop momentum left in pole term");
        momenta.push_back(f);
      } else if (f.matrixValued) {
        fields.push_back(f);
      } else if (f.kind == FieldKind::MetricEta) {
        fields.push_back(f); // free metric factors ride along
      } else {
        throw Error("momentaToDerivatives: unexpected factor");
      }
    }
    // string position of matrix factor = its tag (assigned in expandLogTrace)
    auto posOf = [&](int tag) -> FieldSymbol* {
      for (auto& f : fields)
        if (f.matrixValued && f.tag == tag) return &f;
      return nullptr;
    };
    bool dead = false;
    for (auto& kf : momenta) {
      FieldSymbol* target = posOf(kf.tag);
      if (!target) { dead = true; break; } // the factor the momentum acts on vanished
      IndexSlot d = kf.indices[0];
      target->derivs.push_back(d);
      m.coeff.mulI(1);
    }
    if (dead) continue;
    // squared external momenta -> boxes
    std::map<MomSq, int> rest;
    int dummyCounter = 0;
    for (auto& [ms, e2] : m.coeff.momsq) {
      if (ms.inner || ms.tag >= kDenominatorTagBase || ms.tag == kLoopMomentumTag || e2 < 0) {
        rest[ms] += e2;
        continue;
      }
      FieldSymbol* target = posOf(ms.tag);
      if (!target) { dead = true; break; }
      for (int rep = 0; rep < e2; ++rep) {
        std::string lbl = "#b" + std::to_string(dummyCounter++);
        IndexSlot s1 = up(Space::Spacetime, lbl);
        s1.dummy = true;
        IndexSlot s2 = dn(Space::Spacetime, lbl);
        s2.dummy = true;
        target->derivs.push_back(s1);
        target->derivs.push_back(s2);
        m.coeff.rat = -m.coeff.rat; // two factors of i
      }
    }
    if (dead) continue;
    m.coeff.momsq = std::move(rest);
    m.factors = std::move(fields);
    out.terms.push_back(std::move(m));
  }
  return canonicalize(out);
}

std::mutex masterMutex;

} // namespace

DivergentTraceResult divergentTraceGeneral(const FluctuationOperatorSpec& spec) {
  if (spec.form != FluctForm::GeneralBC)
    throw FormMismatchError("divergentTraceGeneral: operator must be in GeneralBC form");

  static TensorExpr master; // generic-coefficient result, derived once
  static bool masterReady = false;
  {
    std::lock_guard<std::mutex> lock(masterMutex);
    if (!masterReady) {
      TensorExpr acc;
      Rational weights[5] = {Rational(0), Rational(1), Rational(-1, 2), Rational(1, 3),
                             Rational(-1, 4)};
      for (int n = 1; n <= 4; ++n) {
        TensorExpr order = expandLogTraceGeneric(n);
        // pole-extract each integrand monomial
        TensorExpr extracted;
        for (const auto& t : order.terms) {
          // count denominators and collect loop slots
          int denomCount = 0;
          for (auto& [ms, e2] : t.coeff.momsq)
            if (!ms.inner && ms.tag > kDenominatorTagBase && e2 == -1) ++denomCount;
          if (denomCount != n) throw Error("divergentTraceGeneral: malformed integrand");
          std::vector<IndexSlot> loopSlots;
          TensorMonomial stripped;
          stripped.coeff = t.coeff;
          stripped.coeff.momsq.clear();
          for (auto& [ms, e2] : t.coeff.momsq)
            if (!(ms.tag > kDenominatorTagBase && !ms.inner)) stripped.coeff.mulMomSq(ms, e2);
          for (auto& f : t.factors) {
            if (f.kind == FieldKind::MomentumSmallK && f.tag == kLoopMomentumTag)
              loopSlots.push_back(f.indices[0]);
            else
              stripped.factors.push_back(f);
          }
          int r = (int)loopSlots.size();
          TensorExpr pole = divergentMomentumIntegral(r, n);
          if (pole.isZero()) continue;
          // splice: rename pole's free slots mu1..mur onto the loop slot labels
          int fresh = 0;
          for (const auto& pt : pole.terms) {
            TensorMonomial pm = renameDummies(pt, "#p", fresh);
            for (auto& f : pm.factors) {
              for (auto& s : f.indices) {
                if (s.dummy || s.space != Space::Spacetime) continue;
                if (s.label.rfind("mu", 0) == 0) {
                  int slotId = std::stoi(s.label.substr(2)) - 1;
                  const IndexSlot& target = loopSlots[slotId];
                  // pole slots are upper; the loop slot pairs a B-index
                  s.label = target.label;
                  s.dummy = target.dummy;
                  s.variance = target.variance;
                }
              }
            }
            TensorMonomial merged = stripped;
            merged.coeff = stripped.coeff * pm.coeff;
            merged.factors.insert(merged.factors.end(), pm.factors.begin(), pm.factors.end());
            extracted.terms.push_back(std::move(merged));
          }
        }
        acc = add(acc, scalarMul(momentaToDerivatives(extracted), weights[n]));
      }
      master = acc;
      masterReady = true;
    }
  }

  return {canonicalize(substituteCoefficients(master, spec, 4))};
}

TensorExpr fieldStrengthOperator(const TensorExpr& a) {
  // rename the free slot of A to build the two derivative and commutator terms
  TensorExpr aMu = renameFreeIndices(a, {{"mu", "mu"}});
  TensorExpr aNu = renameFreeIndices(a, {{"mu", "nu"}});
  TensorExpr dMuANu = leibnizDerivative(aNu, dn(Space::Spacetime, "mu"));
  TensorExpr dNuAMu = leibnizDerivative(aMu, dn(Space::Spacetime, "nu"));
  TensorExpr comm = sub(mul(aMu, aNu), mul(aNu, aMu));
  return add(sub(dMuANu, dNuAMu), comm);
}

namespace {

// rewrites the covariant operator into first-order-coefficient form:
// B = -2A, C = -dA - A.A + E
FluctuationOperatorSpec covariantToBC(const TensorExpr& A, const TensorExpr& E) {
  TensorExpr Bexpr = scalarMul(renameFreeIndices(A, {{"mu", "rho"}}), Rational(-2));
  TensorExpr dA = [&] {
    TensorExpr am = renameFreeIndices(A, {{"mu", "s"}});
    TensorExpr d = leibnizDerivative(am, up(Space::Spacetime, "s2"));
    return contract(d, dn(Space::Spacetime, "s"), up(Space::Spacetime, "s2"));
  }();
  TensorExpr AA = [&] {
    TensorExpr a1 = renameFreeIndices(A, {{"mu", "s"}});
    TensorExpr a2 = renameFreeIndices(A, {{"mu", "s2"}});
    TensorExpr prod = mul(a1, a2);
    return contractWithMetric(prod, dn(Space::Spacetime, "s"), dn(Space::Spacetime, "s2"));
  }();
  TensorExpr Cexpr = add(sub(scalarMul(dA, Rational(-1)), AA), E);
  return FluctuationOperatorSpec::generalBC(Bexpr, Cexpr);
}

// scalar F.F of the field strength operator built on A (free slot "mu")
TensorExpr fieldStrengthSquare(const TensorExpr& A) {
  TensorExpr Fop = fieldStrengthOperator(A);
  TensorExpr F2 = renameFreeIndices(Fop, {{"mu", "mu2"}, {"nu", "nu2"}});
  TensorExpr FF = mul(Fop, F2);
  FF = contractWithMetric(FF, dn(Space::Spacetime, "mu"), dn(Space::Spacetime, "mu2"));
  FF = contractWithMetric(FF, dn(Space::Spacetime, "nu"), dn(Space::Spacetime, "nu2"));
  return FF;
}

// removes the overall i * Omega4/eps so the ideal arithmetic runs over plain
// rational monomials
TensorExpr stripPolePrefactor(const TensorExpr& e) {
  ScalarCoeff inv(Rational(-1));
  inv.mulI(1);
  inv.mulConst(SymConst::Omega4, -1);
  inv.mulConst(SymConst::InvEps, -1);
  return scalarMul(e, inv);
}

} // namespace

std::pair<Rational, Rational> covariantCoefficients() {
  static std::pair<Rational, Rational> cached{Rational(0), Rational(0)};
  static bool ready = false;
  static std::mutex mx;
  std::lock_guard<std::mutex> lock(mx);
  if (ready) return cached;

  TensorExpr A = TensorExpr::fromFactors(
      {makeField(FieldKind::GenericCalA, {dn(Space::Spacetime, "mu")})});
  TensorExpr E = TensorExpr::fromFactors({makeField(FieldKind::GenericE, {})});

  TensorExpr X = divergentTraceGeneral(covariantToBC(A, E)).integrand;
  TensorExpr Y = stripPolePrefactor(X); // X = i(Om4/eps) * (-Y)

  ReductionOptions ideal = traceReduction();

  // F.F coefficient from the E-free part
  TensorExpr Y_A = dropKind(Y, FieldKind::GenericE);
  TensorExpr FF = fieldStrengthSquare(A);
  auto joint = reduceJointly({Y_A, FF}, ideal);
  if (joint[0].empty() || joint[1].empty())
    throw Error("covariantCoefficients: degenerate reduction");
  Rational cF(0);
  {
    std::map<std::string, Rational> lhs(joint[0].begin(), joint[0].end());
    std::map<std::string, Rational> rhs(joint[1].begin(), joint[1].end());
    if (lhs.size() != rhs.size())
      throw Error("covariantCoefficients: F.F residuals are not proportional");
    bool first = true;
    for (auto& [key, r] : rhs) {
      auto it = lhs.find(key);
      if (it == lhs.end())
        throw Error("covariantCoefficients: F.F residual shape mismatch");
      Rational ratio = it->second / r;
      if (first) {
        cF = ratio;
        first = false;
      } else if (ratio != cF) {
        throw Error("covariantCoefficients: F.F residuals are not proportional");
      }
    }
  }

  // E^2 coefficient from the A-free part
  TensorExpr Y_E = dropKind(Y, FieldKind::GenericCalA);
  TensorExpr EE = mul(E, E);
  auto jointE = reduceJointly({Y_E, EE}, ideal);
  if (jointE[0].size() != 1 || jointE[1].size() != 1 ||
      jointE[0][0].first != jointE[1][0].first)
    throw Error("covariantCoefficients: E^2 residual mismatch");
  Rational cE = jointE[0][0].second / jointE[1][0].second;

  // full verification including the mixed A-E sector
  TensorExpr target = add(scalarMul(FF, cF), scalarMul(EE, cE));
  if (!equalModulo(Y, target, ideal))
    throw Error("covariantCoefficients: covariant reduction identity failed");

  // X = i(Om4/eps) Y and Y = cF*FF + cE*EE, so the two-term covariant form
  // -i(Om4/eps){aF*FF + aE*EE} has aF = -cF, aE = -cE
  cached = {-cF, -cE};
  ready = true;
  return cached;
}

DivergentTraceResult specializeCovariant(const FluctuationOperatorSpec& spec) {
  if (spec.form != FluctForm::CovariantAE)
    throw FormMismatchError("specializeCovariant: operator must be in CovariantAE form");
  auto [cF, cE] = covariantCoefficients();

  TensorExpr FF = spec.A.isZero() ? TensorExpr::zero() : fieldStrengthSquare(spec.A);
  TensorExpr EE = spec.E.isZero() ? TensorExpr::zero() : mul(spec.E, spec.E);
  TensorExpr bracket = add(scalarMul(FF, cF), scalarMul(EE, cE));
  ScalarCoeff pref(Rational(-1));
  pref.mulI(1);
  pref.mulConst(SymConst::Omega4, 1);
  pref.mulConst(SymConst::InvEps, 1);
  return {scalarMul(bracket, pref)};
}

} // namespace vpd
