#include "vpdiff/acceptance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vpdiff/brst.hpp"
#include "vpdiff/feynman.hpp"
#include "vpdiff/heat_kernel.hpp"
#include "vpdiff/ledger.hpp"
#include "vpdiff/regulator.hpp"

namespace vpd {

namespace {

ScalarCoeff poleUnit(Rational r) {
  ScalarCoeff c(std::move(r));
  c.mulI(1);
  c.mulConst(SymConst::Omega4, 1);
  c.mulConst(SymConst::InvEps, 1);
  return c;
}

IndexSlot dS(const char* l, Variance v = Variance::Lower) {
  return IndexSlot{Space::Spacetime, v, l, true};
}

FieldSymbol Bf(IndexSlot s, std::vector<IndexSlot> derivs = {}) {
  FieldSymbol f = makeField(FieldKind::GenericB, {std::move(s)});
  f.derivs = std::move(derivs);
  return f;
}

FieldSymbol Cf() { return makeField(FieldKind::GenericC, {}); }

// frozen nine-term golden table of the general divergent trace
TensorExpr masterTarget(const std::array<Rational, 9>& c) {
  TensorExpr sum;
  auto push = [&](Rational coef, std::vector<FieldSymbol> fs) {
    if (coef.isZero()) return;
    sum.terms.push_back(TensorMonomial(poleUnit(coef), std::move(fs)));
  };
  push(c[0], {Bf(dS("a"), {dS("a", Variance::Upper)}), Bf(dS("b"), {dS("b", Variance::Upper)})});
  push(c[1], {Bf(dS("a"), {dS("b", Variance::Upper)}), Bf(dS("a", Variance::Upper), {dS("b")})});
  push(c[2], {Bf(dS("a"), {dS("a", Variance::Upper)}), Cf()});
  push(c[3], {Cf(), Cf()});
  push(c[4], {Bf(dS("a"), {dS("a", Variance::Upper)}), Bf(dS("b", Variance::Upper)), Bf(dS("b"))});
  push(c[5], {Bf(dS("a")), Bf(dS("b", Variance::Upper), {dS("a", Variance::Upper)}), Bf(dS("b"))});
  push(c[6], {Cf(), Bf(dS("b", Variance::Upper)), Bf(dS("b"))});
  push(c[7], {Bf(dS("a", Variance::Upper)), Bf(dS("a")), Bf(dS("b", Variance::Upper)), Bf(dS("b"))});
  push(c[8], {Bf(dS("a", Variance::Upper)), Bf(dS("b", Variance::Upper)), Bf(dS("a")), Bf(dS("b"))});
  return sum;
}

const std::array<Rational, 9> kMasterCoeffs = {
    Rational(-1, 12), Rational(-1, 24), Rational(1, 2),  Rational(-1, 2), Rational(1, 12),
    Rational(-1, 12), Rational(-1, 4),  Rational(-1, 48), Rational(-1, 96)};

FluctuationOperatorSpec genericSpec() {
  return FluctuationOperatorSpec::generalBC(
      TensorExpr::fromFactors({makeField(FieldKind::GenericB, {dn(Space::Spacetime, "rho")})}),
      TensorExpr::fromFactors({makeField(FieldKind::GenericC, {})}));
}

std::string rs(const Rational& r) { return r.str(); }

CheckResult criterionMasterFormula() {
  CheckResult res{"1 heat-kernel master formula", false, ""};
  DivergentTraceResult master = divergentTraceGeneral(genericSpec());
  ReductionOptions ideal = traceReduction();
  bool match = equalModulo(master.integrand, masterTarget(kMasterCoeffs), ideal);
  bool pinned = true;
  for (int i = 0; i < 9 && pinned; ++i) {
    auto c = kMasterCoeffs;
    c[i] += Rational(1, 1000);
    if (equalModulo(master.integrand, masterTarget(c), ideal)) pinned = false;
  }
  res.pass = match && pinned;
  res.detail = std::string("nine coefficients {-1/12,-1/24,1/2,-1/2,1/12,-1/12,-1/4,-1/48,-1/96} ") +
               (match ? "reproduced exactly" : "NOT reproduced") +
               (pinned ? ", each pinned" : ", degeneracy detected");
  return res;
}

CheckResult criterionCovariant() {
  CheckResult res{"2 covariant specialization", false, ""};
  auto [cF, cE] = covariantCoefficients(); // derivation includes the identity check
  res.pass = cF == Rational(1, 12) && cE == Rational(1, 2);
  res.detail = "field-strength-square coefficient " + rs(cF) + ", operator-square coefficient " +
               rs(cE) + " (derived and verified modulo trace cyclicity and total derivatives)";
  return res;
}

CheckResult criterionPureLedger() {
  CheckResult res{"3 pure-theory ledger", false, ""};
  Rational g = extractFFCoefficient(scalarMul(scalarMul(divergentGaugeDeterminant(),
                                                        ScalarCoeff::imaginary()),
                                              Rational(-1)));
  Rational h = extractFFCoefficient(scalarMul(scalarMul(divergentGhostDeterminant(),
                                                        ScalarCoeff::imaginary()),
                                              Rational(-1)));
  Rational total = extractFFCoefficient(assembleOneLoopDivergence());
  Rational cR = renormalizedCoupling(MatterContent::pure()).c;
  BetaResult beta = betaFunction(MatterContent::pure());
  bool ok = g == Rational(20, 3) && h == Rational(-1, 3) && total == Rational(-11, 3) &&
            cR == Rational(11, 3) && beta.coefficient == Rational(-11, 3) &&
            beta.asymptoticallyFree && couplingNormalizationIdentity();
  res.pass = ok;
  res.detail = "gauge " + rs(g) + " (5/3*4), ghost " + rs(h) + " (-1/12*4), assembled " +
               rs(total) + ", coupling shift " + rs(cR) + ", beta " + rs(beta.coefficient) +
               " -> asymptotically free";
  return res;
}

CheckResult criterionMatter() {
  CheckResult res{"4 matter determinants", false, ""};
  Rational dg = matterGaugeCoefficient();
  Rational ddF = matterDiracCoefficient(false);
  Rational ddC = matterDiracCoefficient(true);
  Rational dsD = matterScalarCoefficient(true);
  Rational dsS = matterScalarCoefficient(false);
  res.pass = dg == Rational(-1, 6) && ddF == Rational(1, 3) && ddC == Rational(1, 6) &&
             dsD == Rational(1, 6) && dsS == Rational(1, 12);
  res.detail = "gauge " + rs(dg) + ", dirac " + rs(ddF) + " full / " + rs(ddC) +
               " chiral, scalar " + rs(dsD) + " doublet / " + rs(dsS) +
               " single (gamma-trace pipeline)";
  return res;
}

CheckResult criterionSmLedger() {
  CheckResult res{"5 standard-model ledger", false, ""};
  auto [entries, bracket] = smLedger();
  Rational cR = renormalizedCoupling(MatterContent::standardModel()).c;
  BetaResult beta = betaFunction(MatterContent::standardModel());
  bool brackets = entries.size() == 4 && entries[0].twelfths == Rational(44) &&
                  entries[1].twelfths == Rational(24) && entries[2].twelfths == Rational(-90) &&
                  entries[3].twelfths == Rational(-2);
  res.pass = brackets && bracket == Rational(-24) && cR == Rational(-2) &&
             beta.coefficient == Rational(2) && !beta.asymptoticallyFree;
  res.detail = "bracket 44+24-90-2 = " + rs(bracket) + ", coupling shift " + rs(cR) +
               ", beta " + rs(beta.coefficient) + " -> not asymptotically free";
  return res;
}

CheckResult criterionPowerCounting() {
  CheckResult res{"6 power counting", false, ""};
  bool ok = vertexDivergenceIndex(VertexKind::of(VertexTag::TriGauge)) == 0 &&
            vertexDivergenceIndex(VertexKind::of(VertexTag::QuadGauge)) == 0 &&
            vertexDivergenceIndex(VertexKind::of(VertexTag::GhostGauge)) == 0;
  for (int b = 0; b <= 8; ++b) ok = ok && superficialDegree(b) == 4 - b;
  res.pass = ok;
  res.detail = "vertex indices all zero; superficial degree 4 - B for B in 0..8";
  return res;
}

CheckResult criterionFeynman() {
  CheckResult res{"7 feynman-rule properties", false, ""};
  bool ok = true;
  std::string notes;

  TensorExpr g = gaugePropagator(1, "mu", "nu", "al", "be");
  TensorExpr gk = contract(mul(g, TensorExpr::fromFactors({momentumK(1, up(Space::Inner, "x"))})),
                           dn(Space::Inner, "al"), up(Space::Inner, "x"));
  ok = ok && gk.isZero();
  TensorExpr gh = ghostPropagator(1, "ga", "de");
  TensorExpr ghk = contract(mul(gh, TensorExpr::fromFactors({momentumK(1, dn(Space::Inner, "x"))})),
                            up(Space::Inner, "ga"), dn(Space::Inner, "x"));
  ok = ok && ghk.isZero();
  notes += ok ? "transversality ok" : "transversality FAILED";

  TensorExpr tri = threeGaugeVertex();
  TensorExpr triRot = renameFreeIndices(
      permuteMomentumTags(tri, {{1, 2}, {2, 3}, {3, 1}}),
      {{"mu", "nu"}, {"nu", "rho"}, {"rho", "mu"}, {"al", "be"}, {"be", "ga"}, {"ga", "al"}});
  bool cyc3 = equal(tri, triRot);
  TensorExpr quad = fourGaugeVertex();
  TensorExpr quadRot = renameFreeIndices(
      permuteMomentumTags(quad, {{1, 2}, {2, 3}, {3, 4}, {4, 1}}),
      {{"mu", "nu"}, {"nu", "rho"}, {"rho", "si"}, {"si", "mu"},
       {"al", "be"}, {"be", "ga"}, {"ga", "de"}, {"de", "al"}});
  bool cyc4 = equal(quad, quadRot);
  ok = ok && cyc3 && cyc4;
  notes += cyc3 && cyc4 ? "; cyclic invariance ok" : "; cyclic invariance FAILED";

  TensorExpr z3 = tri, z4 = quad;
  for (int t = 1; t <= 3; ++t) z3 = zeroMomentum(z3, FieldKind::MomentumK, t);
  for (int t = 1; t <= 4; ++t) z4 = zeroMomentum(z4, FieldKind::MomentumK, t);
  ok = ok && z3.isZero() && z4.isZero();
  notes += z3.isZero() && z4.isZero() ? "; zero inner momenta ok" : "; zero inner momenta FAILED";

  int guards = 0;
  std::map<int, Vec4> bad3 = {{1, {1, 0, 0, 0}}, {2, {0, 0, 0, 0}}, {3, {0, 0, 0, 0}}};
  try {
    evaluateAt(tri, bad3, bad3, {{"mu", 0}, {"nu", 0}, {"rho", 0}, {"al", 0}, {"be", 0}, {"ga", 0}});
  } catch (const MomentumConservationError&) {
    ++guards;
  }
  std::map<int, Vec4> bad4 = {{1, {1, 0, 0, 0}}, {2, {0, 0, 0, 0}}, {3, {0, 0, 0, 0}},
                              {4, {0, 0, 0, 0}}};
  try {
    evaluateAt(quad, bad4, bad4, {{"mu", 0}, {"nu", 0}, {"rho", 0}, {"si", 0},
                                  {"al", 0}, {"be", 0}, {"ga", 0}, {"de", 0}});
  } catch (const MomentumConservationError&) {
    ++guards;
  }
  try {
    evaluateAt(ghostGaugeVertex(), bad3, bad3, {{"ga", 0}, {"de", 0}, {"mu", 0}, {"al", 0}});
  } catch (const MomentumConservationError&) {
    ++guards;
  }
  ok = ok && guards == 3;
  notes += guards == 3 ? "; conservation guards ok" : "; conservation guards FAILED";

  res.pass = ok;
  res.detail = notes;
  return res;
}

CheckResult criterionBrst(long long corpusSize, uint64_t seed) {
  CheckResult res{"8 brst", false, ""};
  auto A = makeField(FieldKind::GaugeA, {dn(Space::Spacetime, "mu"), up(Space::Inner, "al")});
  auto Om = makeField(FieldKind::GhostOmega, {up(Space::Inner, "de")});
  auto Os = makeField(FieldKind::AntighostOmegaStar, {dn(Space::Inner, "ga")});
  auto H = makeField(FieldKind::AuxiliaryH, {dn(Space::Inner, "ga")});
  auto Psi = makeField(FieldKind::MatterPsi, {});

  bool gens = true;
  for (auto& f : {A, Om, Os, H, Psi})
    gens = gens && nilpotencyCheck(TensorExpr::fromFactors({f})).pass;

  long long tested = 0;
  bool corpus = nilpotencyCorpus(corpusSize, seed, &tested);

  // gauge-fixed action decomposition
  bool decomposition = true;
  try {
    sOfGaugeFermion(covariantGaugeFixing()); // throws when the three-term form fails
  } catch (const Error&) {
    decomposition = false;
  }

  InvarianceReport inv = brstInvarianceOfAction();

  res.pass = gens && corpus && decomposition && inv.pass;
  std::ostringstream d;
  d << "nilpotency on generators " << (gens ? "PASS" : "FAIL") << "; corpus of " << tested
    << " monomials " << (corpus ? "PASS" : "FAIL") << "; gauge-fermion three-term decomposition "
    << (decomposition ? "PASS" : "FAIL") << "; action invariance: fermion part "
    << (inv.fermionPartPass ? "PASS" : "FAIL") << ", classical part "
    << (inv.gaugePartPass ? "PASS" : "FAIL");
  if (!inv.gaugePartPass)
    d << " (residual equals the inner-metric compensation term: "
      << (inv.obstructionIdentified ? "identified exactly" : "NOT identified")
      << "; the displayed field variation leaves the flat inner-index contraction untransformed;"
      << " see the project notes)";
  res.detail = d.str();
  return res;
}

CheckResult criterionRegulator(const AcceptanceOptions& opt) {
  CheckResult res{"9 regulator numerics", false, ""};
  std::ostringstream d;
  bool ok = true;

  // spectrum law on random momenta with nonzero K0
  CounterStream cs{opt.seed, 0x600d0000u};
  double worst = 0;
  for (long long i = 0; i < opt.spectrumSamples; ++i) {
    auto [u0, u1] = cs.pair(i, 0);
    auto [u2, u3] = cs.pair(i, 1);
    Vec4 K{0.2 + u0, (2 * u1 - 1), (2 * u2 - 1), (2 * u3 - 1)};
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(matrixM(K));
    auto ev = es.eigenvalues();
    double third = -minkowskiSq(K) / (K[0] * K[0]);
    std::array<double, 3> want{third, 1.0, 1.0};
    std::sort(want.begin(), want.end());
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(ev[j] - want[j]));
  }
  bool spectrumOk = worst <= 1e-12;
  ok = ok && spectrumOk;
  d << "spectrum worst deviation " << worst << " over " << opt.spectrumSamples << " momenta "
    << (spectrumOk ? "PASS" : "FAIL");

  RegulatorConfig cfg;
  cfg.lambda = 1.0;
  cfg.samples = opt.regulatorSamples;
  cfg.seed = opt.seed;
  cfg.workers = opt.workers;

  RegulatorConfig posCfg = cfg;
  posCfg.samples = std::min<long long>(opt.regulatorSamples, 200000);
  PositivityReport prep = hamiltonianPositivitySample(posCfg);
  ok = ok && prep.pass;
  d << "; positivity min " << prep.minValue << " " << (prep.pass ? "PASS" : "FAIL");

  bool oddOk = true;
  for (int r : {1, 3}) {
    RegulatorConfig oc = cfg;
    oc.samples = std::max<long long>(opt.regulatorSamples / 10, 100000);
    MomentResult m = regularizedMoment(r, oc);
    for (auto& [key, val] : m.components)
      if (std::abs(val) > 3 * std::max(m.errors.at(key), 1e-18)) oddOk = false;
  }
  ok = ok && oddOk;
  d << "; odd moments within three sigma " << (oddOk ? "PASS" : "FAIL");

  bool scalingOk = true;
  for (int r : {0, 2})
    for (double rho : {0.5, 2.0, 10.0}) {
      ScalingReport rep = scalingCovarianceCheck(r, rho, cfg);
      if (!rep.pass) {
        scalingOk = false;
        d << "; scaling r=" << r << " rho=" << rho << " pull " << rep.pullSigma << " FAIL";
      }
    }
  ok = ok && scalingOk;
  if (scalingOk) d << "; scaling covariance (r in {0,2}, rho in {1/2,2,10}) PASS";

  res.pass = ok;
  res.detail = d.str();
  return res;
}

CheckResult criterionDeterminism(const AcceptanceOptions& opt) {
  CheckResult res{"10 determinism", false, ""};
  auto profile = [&](int workers) {
    RegulatorConfig cfg;
    cfg.lambda = 1.0;
    cfg.samples = 200000;
    cfg.seed = opt.seed;
    cfg.workers = workers;
    MomentResult m0 = regularizedMoment(0, cfg);
    MomentResult m2 = regularizedMoment(2, cfg);
    nlohmann::json j;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", m0.value);
    j["volume"] = std::string(buf);
    for (auto& [key, val] : m2.components) {
      std::string k = "T";
      for (int idx : key) k += std::to_string(idx);
      std::snprintf(buf, sizeof buf, "%.17g", val);
      j[k] = std::string(buf);
    }
    return j.dump();
  };
  std::string a = profile(opt.workers);
  std::string b = profile(opt.workers);
  std::string c = profile(opt.workers == 1 ? 4 : 1);
  res.pass = a == b && a == c;
  res.detail = res.pass
                   ? "byte-identical machine reports across repeated runs and worker counts"
                   : "report bytes differ between runs";
  return res;
}

} // namespace

std::map<std::string, std::pair<double, double>> loadGoldenConstants(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("golden constants: cannot open " + path);
  std::map<std::string, std::pair<double, double>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    double value, tol;
    if (ls >> name >> value >> tol) out[name] = {value, tol};
  }
  return out;
}

CheckResult checkGoldenConstants(const std::string& path) {
  CheckResult res{"golden constants", false, ""};
  auto golden = loadGoldenConstants(path);
  std::map<std::string, double> current = {
      {"shell_volume_lambda1", shellQuadrature(0, 0, 1.0)},
      {"shell_T00_lambda1", shellQuadrature(1, 0, 1.0)},
      {"shell_T11_lambda1", shellQuadrature(0, 1, 1.0) / 3.0},
      {"omega1_moment_ratio", omega1MomentRatio(1.0)},
  };
  std::ostringstream d;
  bool ok = true;
  for (auto& [name, vt] : golden) {
    auto it = current.find(name);
    if (it == current.end()) {
      ok = false;
      d << "GoldenMismatch: unknown constant " << name << "; ";
      continue;
    }
    if (std::abs(it->second - vt.first) > vt.second) {
      ok = false;
      d << "GoldenMismatch: " << name << " computed " << it->second << " vs recorded " << vt.first
        << " (tol " << vt.second << "); ";
    }
  }
  for (auto& [name, val] : current)
    if (!golden.count(name)) {
      ok = false;
      d << "GoldenMismatch: missing entry " << name << "; ";
    }
  res.pass = ok;
  res.detail = ok ? "quadrature values match the recorded table" : d.str();
  return res;
}

std::vector<CheckResult> runAcceptance(const AcceptanceOptions& opt) {
  std::vector<CheckResult> out;
  out.push_back(criterionMasterFormula());
  out.push_back(criterionCovariant());
  out.push_back(criterionPureLedger());
  out.push_back(criterionMatter());
  out.push_back(criterionSmLedger());
  out.push_back(criterionPowerCounting());
  out.push_back(criterionFeynman());
  out.push_back(criterionBrst(opt.corpusSize, opt.seed));
  out.push_back(criterionRegulator(opt));
  out.push_back(criterionDeterminism(opt));
  out.push_back(checkGoldenConstants(opt.goldenPath));
  return out;
}

std::string acceptanceReportJson(const std::vector<CheckResult>& results,
                                 const AcceptanceOptions& opt) {
  nlohmann::json j;
  j["subcommand"] = "verify-all";
  j["seed"] = opt.seed;
  j["workers"] = opt.workers;
  j["regulatorSamples"] = opt.regulatorSamples;
  nlohmann::json checks = nlohmann::json::array();
  int failures = 0;
  for (auto& r : results) {
    nlohmann::json c;
    c["id"] = r.id;
    c["pass"] = r.pass;
    c["detail"] = r.detail;
    checks.push_back(c);
    if (!r.pass) ++failures;
  }
  j["checks"] = checks;
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

} // namespace vpd
