#include "vpdiff/feynman.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vpd {

StateLabel StateLabel::gaugeState(Vec4 k, double spin, Vec4 K) {
  return {k, spin, K, 1, {}};
}
StateLabel StateLabel::matterState(Vec4 k, double spin, Vec4 K) {
  return {k, spin, K, 0, {}};
}

namespace {

ScalarCoeff invLambdaSq(Rational r) {
  ScalarCoeff c(std::move(r));
  c.mulConst(SymConst::Lambda, -2);
  return c;
}

IndexSlot upS(const std::string& l) { return up(Space::Spacetime, l); }
IndexSlot dnS(const std::string& l) { return dn(Space::Spacetime, l); }
IndexSlot upI(const std::string& l) { return up(Space::Inner, l); }
IndexSlot dnI(const std::string& l) { return dn(Space::Inner, l); }

} // namespace

TensorExpr transversalDelta(int tag, const std::string& al, const std::string& be) {
  TensorExpr etaTerm = TensorExpr::fromFactors({metric(dnI(al), dnI(be))});
  ScalarCoeff c(Rational(-1));
  c.mulMomSq({true, tag, false}, -1);
  TensorExpr kkTerm = scalarMul(
      TensorExpr::fromFactors({momentumK(tag, dnI(al)), momentumK(tag, dnI(be))}), c);
  return add(etaTerm, kkTerm);
}

TensorExpr gaugePropagator(int tag, const std::string& mu, const std::string& nu,
                           const std::string& al, const std::string& be) {
  // spacetime factor eta_{mu nu} - (1 - xi) k_mu k_nu / k^2
  TensorExpr st = TensorExpr::fromFactors({metric(dnS(mu), dnS(nu))});
  TensorExpr kk = TensorExpr::fromFactors(
      {momentumk(tag, dnS(mu)), momentumk(tag, dnS(nu))});
  ScalarCoeff noXi(Rational(-1));
  noXi.mulMomSq({false, tag, false}, -1);
  ScalarCoeff withXi(Rational(1));
  withXi.mulMomSq({false, tag, false}, -1);
  withXi.mulConst(SymConst::Xi, 1);
  st = add(st, add(scalarMul(kk, noXi), scalarMul(kk, withXi)));

  TensorExpr inner = transversalDelta(tag, al, be);
  ScalarCoeff denom(Rational(1));
  denom.mulMomSq({false, tag, true}, -1); // 1/(k^2 - i eps), annotation inert
  return scalarMul(mul(st, inner), denom);
}

TensorExpr ghostPropagator(int tag, const std::string& ga, const std::string& de) {
  TensorExpr etaTerm = TensorExpr::fromFactors({metric(upI(ga), dnI(de))});
  ScalarCoeff c(Rational(-1));
  c.mulMomSq({true, tag, false}, -1);
  TensorExpr kkTerm = scalarMul(
      TensorExpr::fromFactors({momentumK(tag, upI(ga)), momentumK(tag, dnI(de))}), c);
  ScalarCoeff denom(Rational(1));
  denom.mulMomSq({false, tag, true}, -1);
  return scalarMul(add(etaTerm, kkTerm), denom);
}

TensorExpr threeGaugeVertex() {
  auto mono = [&](int Ktag, const std::string& Kidx, const std::string& e1,
                  const std::string& e2, int ktag, const std::string& kidx,
                  const std::string& m1, const std::string& m2, Rational sign) {
    return TensorExpr::fromMonomial(TensorMonomial(
        invLambdaSq(sign * Rational(-2)),
        {momentumK(Ktag, upI(Kidx)), metric(upI(e1), upI(e2)), momentumk(ktag, dnS(kidx)),
         metric(dnS(m1), dnS(m2))}));
  };
  TensorExpr v;
  // K1^ga eta^{al be} (k2_rho eta_{mu nu} - k2_mu eta_{nu rho})
  v = add(v, mono(1, "ga", "al", "be", 2, "rho", "mu", "nu", Rational(1)));
  v = add(v, mono(1, "ga", "al", "be", 2, "mu", "nu", "rho", Rational(-1)));
  // K2^al eta^{be ga} (k3_mu eta_{nu rho} - k3_nu eta_{rho mu})
  v = add(v, mono(2, "al", "be", "ga", 3, "mu", "nu", "rho", Rational(1)));
  v = add(v, mono(2, "al", "be", "ga", 3, "nu", "rho", "mu", Rational(-1)));
  // K3^be eta^{ga al} (k1_nu eta_{rho mu} - k1_rho eta_{mu nu})
  v = add(v, mono(3, "be", "ga", "al", 1, "nu", "rho", "mu", Rational(1)));
  v = add(v, mono(3, "be", "ga", "al", 1, "rho", "mu", "nu", Rational(-1)));
  return v;
}

TensorExpr fourGaugeVertex() {
  struct KK {
    int t1;
    const char* i1;
    int t2;
    const char* i2;
    const char* e1;
    const char* e2;
    int sign;
  };
  struct Block {
    std::vector<KK> inner;
    const char* m1a;
    const char* m1b;
    const char* m2a;
    const char* m2b; // eta_{m1a m1b} eta_{m2a m2b} - eta_{n1a n1b} eta_{n2a n2b}
    const char* n1a;
    const char* n1b;
    const char* n2a;
    const char* n2b;
  };
  std::vector<Block> blocks = {
      {{{1, "ga", 2, "de", "al", "be", 1},
        {2, "de", 3, "al", "be", "ga", -1},
        {3, "al", 4, "be", "ga", "de", 1},
        {1, "ga", 4, "be", "al", "de", -1}},
       "mu", "nu", "rho", "si", "mu", "si", "nu", "rho"},
      {{{1, "de", 2, "ga", "al", "be", 1},
        {1, "de", 3, "be", "al", "ga", -1},
        {3, "be", 4, "al", "ga", "de", 1},
        {2, "ga", 4, "al", "be", "de", -1}},
       "mu", "nu", "rho", "si", "mu", "rho", "nu", "si"},
      {{{1, "be", 3, "de", "al", "ga", 1},
        {1, "be", 4, "ga", "al", "de", -1},
        {2, "al", 4, "ga", "be", "de", 1},
        {2, "al", 3, "de", "be", "ga", -1}},
       "mu", "rho", "nu", "si", "mu", "si", "nu", "rho"}};

  TensorExpr v;
  for (const auto& b : blocks) {
    for (const auto& kk : b.inner) {
      auto mono = [&](const char* ma, const char* mb, const char* mc, const char* md,
                      Rational st) {
        return TensorExpr::fromMonomial(TensorMonomial(
            invLambdaSq(Rational(-1) * Rational(kk.sign) * st),
            {momentumK(kk.t1, upI(kk.i1)), momentumK(kk.t2, upI(kk.i2)),
             metric(upI(kk.e1), upI(kk.e2)), metric(dnS(ma), dnS(mb)),
             metric(dnS(mc), dnS(md))}));
      };
      v = add(v, mono(b.m1a, b.m1b, b.m2a, b.m2b, Rational(1)));
      v = add(v, mono(b.n1a, b.n1b, b.n2a, b.n2b, Rational(-1)));
    }
  }
  return v;
}

TensorExpr ghostGaugeVertex() {
  // -(1/L^2)(K2^al eta^{ga de} - K3^de eta^{ga al}) k1_mu
  // the second metric pairs the antighost index with the gauge-leg inner index
  TensorExpr t1 = TensorExpr::fromMonomial(TensorMonomial(
      invLambdaSq(Rational(-1)),
      {momentumK(2, upI("al")), metric(upI("ga"), upI("de")), momentumk(1, dnS("mu"))}));
  TensorExpr t2 = TensorExpr::fromMonomial(TensorMonomial(
      invLambdaSq(Rational(1)),
      {momentumK(3, upI("de")), metric(upI("ga"), upI("al")), momentumk(1, dnS("mu"))}));
  return add(t1, t2);
}

int superficialDegree(int externalLines) {
  if (externalLines < 0) throw Error("superficialDegree: negative line count");
  return 4 - externalLines;
}

int vertexDivergenceIndex(const VertexKind& v) { return v.lineCount + v.derivCount - 4; }

void requireConserved(const std::vector<Vec4>& moms, const char* what) {
  double maxAbs = 0;
  Vec4 sum{};
  for (const auto& m : moms)
    for (int i = 0; i < 4; ++i) {
      sum[i] += m[i];
      maxAbs = std::max(maxAbs, std::abs(m[i]));
    }
  for (int i = 0; i < 4; ++i)
    if (std::abs(sum[i]) > 1e-9 * std::max(1e-300, maxAbs))
      throw MomentumConservationError(std::string(what) + ": momenta do not sum to zero");
}

TensorExpr substConst(const TensorExpr& e, SymConst c, const Rational& value) {
  TensorExpr out = e;
  for (auto& t : out.terms) {
    auto it = t.coeff.pows.find(c);
    if (it == t.coeff.pows.end()) continue;
    int n = it->second;
    t.coeff.pows.erase(it);
    if (n >= 0) {
      for (int i = 0; i < n; ++i) t.coeff.rat *= value;
    } else {
      if (value.isZero()) throw Error("substConst: zero raised to a negative power");
      for (int i = 0; i < -n; ++i) t.coeff.rat /= value;
    }
  }
  return canonicalize(out);
}

std::complex<double> evaluateAt(const TensorExpr& e, const std::map<int, Vec4>& k,
                                const std::map<int, Vec4>& K,
                                const std::map<std::string, int>& freeIndices, double lambda,
                                double xi) {
  // vertices conserve momentum; enforce when several legs are present
  if (k.size() >= 3) {
    std::vector<Vec4> ks, Ks;
    for (auto& [t, v] : k) ks.push_back(v);
    for (auto& [t, v] : K) Ks.push_back(v);
    requireConserved(ks, "spacetime momenta");
    requireConserved(Ks, "inner momenta");
  }
  NumericBindings nb;
  nb.k = k;
  nb.K = K;
  nb.consts[SymConst::Lambda] = lambda;
  nb.consts[SymConst::Xi] = xi;
  return evaluate(e, nb, freeIndices);
}

// --- assembly ---------------------------------------------------------------

namespace {

struct LegLabels {
  std::string st;  // spacetime label (gauge legs)
  std::string in;  // inner label
};

LegLabels labelsFor(const GraphLeg& l) {
  if (l.ghost) return {"", "g" + std::to_string(l.id)};
  return {"m" + std::to_string(l.id), "a" + std::to_string(l.id)};
}

} // namespace

TensorExpr assembleAmplitude(const GraphDescription& g) {
  std::map<int, const GraphLeg*> legById;
  for (auto& l : g.legs) {
    if (!legById.emplace(l.id, &l).second)
      throw MalformedGraphError("assembleAmplitude: duplicate leg id");
  }
  std::map<int, int> legUseVertex, legUseProp;

  TensorExpr amp = TensorExpr::scalar(Rational(1));

  // vertices: instantiate, relabel onto leg ids, check conservation
  for (auto& v : g.vertices) {
    VertexKind kind = VertexKind::of(v.kind);
    if ((int)v.legs.size() != kind.legCount)
      throw MalformedGraphError("assembleAmplitude: wrong leg count at vertex");
    std::vector<Vec4> ks, Ks;
    for (int id : v.legs) {
      if (!legById.count(id)) throw MalformedGraphError("assembleAmplitude: unknown leg id");
      ++legUseVertex[id];
      if (legUseVertex[id] > 1)
        throw MalformedGraphError("assembleAmplitude: leg attached to several vertices");
      ks.push_back(legById[id]->k);
      Ks.push_back(legById[id]->K);
    }
    try {
      requireConserved(ks, "vertex spacetime momenta");
      requireConserved(Ks, "vertex inner momenta");
    } catch (const MomentumConservationError&) {
      throw;
    }

    TensorExpr vx;
    std::map<std::string, std::string> rename;
    std::map<int, int> retag;
    if (v.kind == VertexTag::TriGauge || v.kind == VertexTag::QuadGauge) {
      vx = v.kind == VertexTag::TriGauge ? threeGaugeVertex() : fourGaugeVertex();
      const char* st[4] = {"mu", "nu", "rho", "si"};
      const char* in[4] = {"al", "be", "ga", "de"};
      for (int i = 0; i < kind.legCount; ++i) {
        auto lab = labelsFor(*legById[v.legs[i]]);
        if (legById[v.legs[i]]->ghost)
          throw MalformedGraphError("assembleAmplitude: ghost leg on a gauge vertex");
        rename[st[i]] = lab.st;
        rename[in[i]] = lab.in;
        retag[i + 1] = v.legs[i];
      }
    } else {
      vx = ghostGaugeVertex();
      const GraphLeg* l1 = legById[v.legs[0]];
      const GraphLeg* l2 = legById[v.legs[1]];
      const GraphLeg* l3 = legById[v.legs[2]];
      if (!l1->ghost || !l2->ghost || l3->ghost)
        throw MalformedGraphError("assembleAmplitude: ghost vertex expects ghost, ghost, gauge");
      rename["ga"] = labelsFor(*l1).in;
      rename["de"] = labelsFor(*l2).in;
      rename["mu"] = labelsFor(*l3).st;
      rename["al"] = labelsFor(*l3).in;
      retag[1] = l1->id;
      retag[2] = l2->id;
      retag[3] = l3->id;
    }
    vx = permuteMomentumTags(vx, retag);
    vx = renameFreeIndices(vx, rename);
    amp = mul(amp, vx);
  }

  // propagators: joined legs carry opposite momenta
  for (auto& p : g.propagators) {
    const GraphLeg* a = legById.count(p.legA) ? legById[p.legA] : nullptr;
    const GraphLeg* b = legById.count(p.legB) ? legById[p.legB] : nullptr;
    if (!a || !b) throw MalformedGraphError("assembleAmplitude: unknown propagator leg");
    ++legUseProp[a->id];
    ++legUseProp[b->id];
    if (legUseProp[a->id] > 1 || legUseProp[b->id] > 1)
      throw MalformedGraphError("assembleAmplitude: leg joined twice");
    for (int i = 0; i < 4; ++i) {
      double scale = std::max({1e-300, std::abs(a->k[i]), std::abs(b->k[i])});
      if (std::abs(a->k[i] + b->k[i]) > 1e-9 * scale ||
          std::abs(a->K[i] + b->K[i]) > 1e-9 * scale)
        throw MomentumConservationError("assembleAmplitude: joined legs not back-to-back");
    }
    if (a->ghost != b->ghost || a->ghost != p.ghost)
      throw MalformedGraphError("assembleAmplitude: propagator species mismatch");

    auto la = labelsFor(*a);
    auto lb = labelsFor(*b);
    // propagator slot labels: private names, then contracted or renamed
    TensorExpr prop;
    std::vector<std::pair<std::string, std::pair<Space, std::string>>> sides;
    if (!p.ghost) {
      prop = gaugePropagator(a->id, "#pm1", "#pm2", "#pa1", "#pa2");
      sides = {{"#pm1", {Space::Spacetime, la.st}},
               {"#pa1", {Space::Inner, la.in}},
               {"#pm2", {Space::Spacetime, lb.st}},
               {"#pa2", {Space::Inner, lb.in}}};
    } else {
      prop = ghostPropagator(a->id, "#pg1", "#pg2");
      sides = {{"#pg1", {Space::Inner, la.in}}, {"#pg2", {Space::Inner, lb.in}}};
    }
    bool aInVertex = legUseVertex.count(a->id);
    bool bInVertex = legUseVertex.count(b->id);
    amp = mul(amp, prop);
    for (auto& [propLabel, target] : sides) {
      bool vertexSide = (propLabel.find('1') != std::string::npos) ? aInVertex : bInVertex;
      // find the propagator slot's variance in the current product
      auto findFree = [&](const std::string& lbl) -> IndexSlot {
        for (auto& t : amp.terms)
          for (auto& f : t.factors) {
            for (auto& s : f.indices)
              if (!s.dummy && s.label == lbl) return s;
            for (auto& s : f.derivs)
              if (!s.dummy && s.label == lbl) return s;
          }
        throw MalformedGraphError("assembleAmplitude: missing propagator slot " + lbl);
      };
      IndexSlot ps = findFree(propLabel);
      if (vertexSide) {
        IndexSlot vs = findFree(target.second);
        amp = contractWithMetric(amp, ps, vs);
      } else {
        amp = renameFreeIndices(amp, {{propLabel, target.second}});
      }
    }
  }

  amp = canonicalize(amp);

  // dangling-index audit: a leg is internal only when a propagator joins it to
  // a vertex; everything else stays free under its own labels
  std::set<std::string> expected;
  for (auto& l : g.legs) {
    if (legUseVertex.count(l.id) && legUseProp.count(l.id)) continue;
    auto lab = labelsFor(l);
    if (!lab.st.empty()) expected.insert(lab.st);
    expected.insert(lab.in);
  }
  if (!amp.terms.empty()) {
    std::set<std::string> got;
    for (auto& s : freeSlots(amp.terms[0])) got.insert(s.label);
    if (got != expected) throw MalformedGraphError("assembleAmplitude: dangling indices");
  }
  return amp;
}

} // namespace vpd
