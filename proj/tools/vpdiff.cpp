// Command-line front end: symbolic Feynman rules, one-loop divergences,
// beta-function ledgers, regularized inner-measure numerics, BRST checks.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "vpdiff/acceptance.hpp"
#include "vpdiff/brst.hpp"
#include "vpdiff/document.hpp"
#include "vpdiff/ledger.hpp"
#include "vpdiff/regulator.hpp"
#include "vpdiff/serialize.hpp"

using nlohmann::json;
using namespace vpd;

namespace {

uint64_t defaultSeed() {
  if (const char* env = std::getenv("VPDIFF_SEED")) return std::strtoull(env, nullptr, 10);
  return 20260808ull;
}

void emit(const json& report, const std::string& outPath) {
  std::string text = report.dump(2) + "\n";
  if (!outPath.empty()) {
    std::ofstream out(outPath);
    out << text;
  }
  std::cout << text;
}

json rationalJson(const Rational& r) { return r.str(); }

int runVertex(const std::string& kind, const std::string& graphPath, const std::string& evalSpec,
              double lambda, double xi, const std::string& outPath) {
  json rep;
  rep["subcommand"] = "vertex";
  if (!graphPath.empty()) {
    GraphDescription g = graphFromDocument(Document::load(graphPath));
    TensorExpr amp = assembleAmplitude(g);
    rep["graph"] = graphPath;
    rep["expression"] = printExpr(amp);
    if (!evalSpec.empty()) {
      std::map<std::string, int> freeIdx;
      std::istringstream in(evalSpec);
      std::string tok;
      while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw DocumentError("vertex: --eval expects name=value");
        freeIdx[tok.substr(0, eq)] = std::stoi(tok.substr(eq + 1));
      }
      std::map<int, Vec4> k, K;
      for (auto& leg : g.legs) {
        k[leg.id] = leg.k;
        K[leg.id] = leg.K;
      }
      auto v = evaluateAt(amp, k, K, freeIdx, lambda, xi);
      rep["value"] = {{"re", v.real()}, {"im", v.imag()}};
      rep["lambda"] = lambda;
      rep["xi"] = xi;
    }
  } else {
    TensorExpr v;
    if (kind == "tri")
      v = threeGaugeVertex();
    else if (kind == "quad")
      v = fourGaugeVertex();
    else if (kind == "ghost")
      v = ghostGaugeVertex();
    else
      throw DocumentError("vertex: unknown kind '" + kind + "'");
    rep["kind"] = kind;
    rep["expression"] = printExpr(v);
    rep["legs"] = kind == "quad" ? 4 : 3;
  }
  emit(rep, outPath);
  return 0;
}

int runPowerCount(int external, const std::string& outPath) {
  json rep;
  rep["subcommand"] = "power-count";
  rep["externalLines"] = external;
  rep["superficialDegree"] = superficialDegree(external);
  rep["vertexDivergenceIndices"] = {
      {"triGauge", vertexDivergenceIndex(VertexKind::of(VertexTag::TriGauge))},
      {"quadGauge", vertexDivergenceIndex(VertexKind::of(VertexTag::QuadGauge))},
      {"ghostGauge", vertexDivergenceIndex(VertexKind::of(VertexTag::GhostGauge))}};
  rep["divergent"] = superficialDegree(external) >= 0;
  emit(rep, outPath);
  return 0;
}

int runDivergence(const std::string& operatorPath, const std::string& outPath) {
  FluctuationOperatorSpec spec = operatorFromDocument(Document::load(operatorPath));
  DivergentTraceResult result = spec.form == FluctForm::CovariantAE
                                    ? specializeCovariant(spec)
                                    : divergentTraceGeneral(spec);
  json rep;
  rep["subcommand"] = "divergence";
  rep["operator"] = operatorPath;
  rep["form"] = spec.form == FluctForm::CovariantAE ? "covariantAE" : "generalBC";
  rep["integrand"] = printExpr(result.integrand);
  rep["terms"] = result.integrand.terms.size();
  rep["check.noLoopMomenta"] = !containsKind(result.integrand, FieldKind::MomentumSmallK);
  emit(rep, outPath);
  return 0;
}

MatterContent matterFromArg(const std::string& arg) {
  if (arg == "pure") return MatterContent::pure();
  if (arg == "sm") return MatterContent::standardModel();
  return matterFromDocument(Document::load(arg));
}

int runBeta(const std::string& matterArg, bool fullLedger, const std::string& outPath) {
  MatterContent content = matterFromArg(matterArg);
  auto [entries, bracket] = ledgerFor(content);
  BetaResult beta = betaFunction(content);
  CouplingRenormalization cr = renormalizedCoupling(content);

  json rep;
  rep["subcommand"] = fullLedger ? "ledger" : "beta";
  rep["matter"] = matterArg;
  json ej = json::array();
  for (auto& e : entries)
    ej.push_back({{"species", e.species}, {"twelfths", rationalJson(e.twelfths)}, {"note", e.note}});
  rep["entries"] = ej;
  rep["bracketTwelfths"] = rationalJson(bracket);
  rep["check.bracket"] = "pure-gauge-bracket plus matter entries, exact rationals";
  rep["betaCoefficient"] = rationalJson(beta.coefficient);
  rep["betaUnits"] = "g^3 / (180 (4 pi)^5)";
  rep["couplingShift"] = rationalJson(cr.c);
  rep["couplingLaw"] = "g_R = g (1 - g^2/(180 (4 pi)^5) * shift / eps + O(g^4))";
  rep["verdict"] = beta.asymptoticallyFree ? "asymptotically free" : "not asymptotically free";
  emit(rep, outPath);
  return 0;
}

int runMeasure(int rank, double lambda, long long samples, uint64_t seed, int workers,
               const std::string& outPath) {
  RegulatorConfig cfg;
  cfg.lambda = lambda;
  cfg.samples = samples;
  cfg.seed = seed;
  cfg.workers = workers;
  MomentResult m = regularizedMoment(rank, cfg);
  json rep;
  rep["subcommand"] = "measure";
  rep["rank"] = rank;
  rep["lambda"] = lambda;
  rep["samples"] = samples;
  rep["seed"] = seed;
  rep["workers"] = workers;
  rep["lambdaPower"] = m.lambdaPower;
  if (rank == 0) {
    rep["value"] = m.value;
    rep["error"] = m.error;
  }
  json comp = json::object();
  for (auto& [key, val] : m.components) {
    std::string name;
    for (int i : key) name += std::to_string(i);
    comp[name] = {{"value", val}, {"error", m.errors.at(key)}};
  }
  if (rank > 0) rep["components"] = comp;
  if (rank == 2) {
    rep["etaCoefficient"] = {{"value", m.etaCoeff}, {"error", m.etaCoeffError}};
    rep["frameCoefficient"] = {{"value", m.frameCoeff}, {"error", m.frameCoeffError}};
    rep["decompositionResidual"] = m.decompositionResidual;
  }
  emit(rep, outPath);
  return 0;
}

int runScaling(int rank, double rho, double lambda, long long samples, uint64_t seed, int workers,
               const std::string& outPath) {
  RegulatorConfig cfg;
  cfg.lambda = lambda;
  cfg.samples = samples;
  cfg.seed = seed;
  cfg.workers = workers;
  ScalingReport r = scalingCovarianceCheck(rank, rho, cfg);
  json rep;
  rep["subcommand"] = "scaling";
  rep["rank"] = rank;
  rep["rho"] = rho;
  rep["base"] = {{"value", r.base}, {"error", r.baseErr}};
  rep["scaled"] = {{"value", r.scaled}, {"error", r.scaledErr}};
  rep["expectedFactor"] = r.expectedFactor;
  rep["pullSigma"] = r.pullSigma;
  rep["check.scalingCovariance"] = r.pass ? "pass" : "fail";
  emit(rep, outPath);
  return r.pass ? 0 : 1;
}

int runBrst(const std::string& check, const std::string& corpusPath, long long count,
            uint64_t seed, const std::string& outPath) {
  json rep;
  rep["subcommand"] = "brst";
  rep["check"] = check;
  if (check == "nilpotency") {
    json results = json::array();
    bool allPass = true;
    if (!corpusPath.empty()) {
      Document doc = Document::load(corpusPath);
      for (auto& key : doc.keysWithPrefix("expr.")) {
        TensorExpr e = parseExpr(doc.get(key));
        NilpotencyVerdict v = nilpotencyCheck(e);
        results.push_back({{"expr", key}, {"pass", v.pass},
                           {"residual", v.pass ? "0" : printExpr(v.residual)}});
        allPass = allPass && v.pass;
      }
    } else {
      const char* names[5] = {"gauge", "ghost", "antighost", "auxiliary", "matter"};
      std::vector<TensorExpr> gens = {
          TensorExpr::fromFactors({makeField(FieldKind::GaugeA, {dn(Space::Spacetime, "mu"),
                                                                 up(Space::Inner, "al")})}),
          TensorExpr::fromFactors({makeField(FieldKind::GhostOmega, {up(Space::Inner, "de")})}),
          TensorExpr::fromFactors({makeField(FieldKind::AntighostOmegaStar,
                                             {dn(Space::Inner, "ga")})}),
          TensorExpr::fromFactors({makeField(FieldKind::AuxiliaryH, {dn(Space::Inner, "ga")})}),
          TensorExpr::fromFactors({makeField(FieldKind::MatterPsi, {})})};
      for (int i = 0; i < 5; ++i) {
        NilpotencyVerdict v = nilpotencyCheck(gens[i]);
        results.push_back({{"generator", names[i]}, {"pass", v.pass}});
        allPass = allPass && v.pass;
      }
      long long tested = 0;
      bool corpus = nilpotencyCorpus(count, seed, &tested);
      rep["corpus"] = {{"requested", count}, {"tested", tested}, {"pass", corpus}};
      allPass = allPass && corpus;
    }
    rep["results"] = results;
    rep["check.nilpotency"] = allPass ? "pass" : "fail";
    emit(rep, outPath);
    return allPass ? 0 : 1;
  }
  if (check == "action") {
    InvarianceReport inv = brstInvarianceOfAction();
    rep["fermionPart"] = inv.fermionPartPass ? "pass" : "fail";
    rep["classicalPart"] = inv.gaugePartPass ? "pass" : "fail";
    if (!inv.gaugePartPass) {
      rep["classicalResidual"] = printExpr(inv.residual);
      rep["residualIsMetricCompensation"] = inv.obstructionIdentified;
      rep["note"] =
          "the field variation alone leaves the inner-metric compensation term; "
          "the flat inner-index contraction does not transform";
    }
    rep["check.actionInvariance"] = inv.pass ? "pass" : "fail";
    emit(rep, outPath);
    return inv.pass ? 0 : 1;
  }
  throw DocumentError("brst: unknown check '" + check + "'");
}

int runVerifyAll(const AcceptanceOptions& opt, const std::string& outPath) {
  auto results = runAcceptance(opt);
  std::string reportText = acceptanceReportJson(results, opt);
  if (!outPath.empty()) {
    std::ofstream out(outPath);
    out << reportText;
  }
  int failures = 0;
  for (auto& r : results) {
    std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.id.c_str(), r.detail.c_str());
    if (!r.pass) ++failures;
  }
  if (outPath.empty()) std::cout << reportText;
  return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-loop analysis toolkit for the gauge theory of volume-preserving "
               "diffeomorphisms: Feynman rules, divergent traces, beta-function ledgers, "
               "regularized inner-momentum numerics, BRST checks"};
  app.require_subcommand(1);
  app.fallthrough(); // global flags may follow the subcommand

  uint64_t seed = defaultSeed();
  int workers = 1;
  std::string outPath;
  app.add_option("--seed", seed, "random seed (env VPDIFF_SEED overrides the default)");
  app.add_option("--workers", workers, "worker threads for the sampling subcommands");
  app.add_option("--out", outPath, "write the machine-readable report to this path");

  auto* vertex = app.add_subcommand("vertex", "print a vertex factor or assemble a tree graph");
  std::string kind = "tri", graphPath, evalSpec;
  double lambda = 1.0, xi = 1.0;
  vertex->add_option("--kind", kind, "tri | quad | ghost");
  vertex->add_option("--graph", graphPath, "graph description document");
  vertex->add_option("--eval", evalSpec, "evaluate numerically: 'm1=0 a1=1 ...'");
  vertex->add_option("--lambda", lambda, "regulator scale for numeric evaluation");
  vertex->add_option("--xi", xi, "gauge parameter for numeric evaluation");

  auto* power = app.add_subcommand("power-count", "superficial degree of divergence");
  int external = 4;
  power->add_option("--external", external, "number of external gauge/ghost lines")->required();

  auto* divergence = app.add_subcommand("divergence", "divergent trace of a fluctuation operator");
  std::string operatorPath;
  divergence->add_option("--operator", operatorPath, "operator spec document")->required();

  auto* beta = app.add_subcommand("beta", "one-loop beta function for a matter content");
  std::string matterArg = "pure";
  beta->add_option("--matter", matterArg, "pure | sm | path to a matter document");

  auto* ledger = app.add_subcommand("ledger", "per-species one-loop ledger");
  std::string matterArg2 = "sm";
  ledger->add_option("--matter", matterArg2, "pure | sm | path to a matter document");

  auto* measure = app.add_subcommand("measure", "regularized inner-momentum moment");
  int rank = 0;
  double mLambda = 1.0;
  long long samples = 1000000;
  measure->add_option("--rank", rank, "tensor rank of the moment");
  measure->add_option("--lambda", mLambda, "regulator scale");
  measure->add_option("--samples", samples, "Monte Carlo sample budget");

  auto* scaling = app.add_subcommand("scaling", "inner-rescaling covariance check");
  double rho = 2.0, sLambda = 1.0;
  int sRank = 0;
  long long sSamples = 1000000;
  scaling->add_option("--rho", rho, "scale factor");
  scaling->add_option("--rank", sRank, "moment rank");
  scaling->add_option("--lambda", sLambda, "base regulator scale");
  scaling->add_option("--samples", sSamples, "Monte Carlo sample budget");

  auto* brst = app.add_subcommand("brst", "BRST nilpotency and action checks");
  std::string check = "nilpotency", corpusPath;
  long long corpusCount = 100;
  brst->add_option("--check", check, "nilpotency | action");
  brst->add_option("--corpus", corpusPath, "expressions document (expr.N keys)");
  brst->add_option("--count", corpusCount, "random corpus size when no file is given");

  auto* verify = app.add_subcommand("verify-all", "run the full acceptance suite");
  long long vSamples = 10000000;
  long long vCorpus = 500;
  std::string dataDir = "data";
  verify->add_option("--samples", vSamples, "regulator sample budget");
  verify->add_option("--corpus", vCorpus, "BRST corpus size");
  verify->add_option("--data-dir", dataDir, "directory holding golden_constants.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*vertex) return runVertex(kind, graphPath, evalSpec, lambda, xi, outPath);
    if (*power) return runPowerCount(external, outPath);
    if (*divergence) return runDivergence(operatorPath, outPath);
    if (*beta) return runBeta(matterArg, false, outPath);
    if (*ledger) return runBeta(matterArg2, true, outPath);
    if (*measure) return runMeasure(rank, mLambda, samples, seed, workers, outPath);
    if (*scaling) return runScaling(sRank, rho, sLambda, sSamples, seed, workers, outPath);
    if (*brst) return runBrst(check, corpusPath, corpusCount, seed, outPath);
    if (*verify) {
      AcceptanceOptions opt;
      opt.seed = seed;
      opt.workers = workers;
      opt.regulatorSamples = vSamples;
      opt.corpusSize = vCorpus;
      opt.goldenPath = dataDir + "/golden_constants.txt";
      return runVerifyAll(opt, outPath);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
