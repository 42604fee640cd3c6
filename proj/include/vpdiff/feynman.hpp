#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "vpdiff/expr.hpp"
#include "vpdiff/numeric_eval.hpp"

namespace vpd {

struct MomentumConservationError : Error { using Error::Error; };
struct MalformedGraphError : Error { using Error::Error; };

enum class VertexTag { TriGauge, QuadGauge, GhostGauge };

struct VertexKind {
  VertexTag tag;
  int legCount;
  int derivCount; // spacetime derivatives at the vertex
  int lineCount;  // gauge + ghost lines

  static VertexKind of(VertexTag t) {
    switch (t) {
      case VertexTag::TriGauge: return {t, 3, 1, 3};
      case VertexTag::QuadGauge: return {t, 4, 0, 4};
      case VertexTag::GhostGauge: return {t, 3, 1, 3};
    }
    throw Error("unknown vertex tag");
  }
};

// one-particle state label: momentum, spin, inner momentum, inner spin
struct StateLabel {
  Vec4 k{};
  double spin = 0;
  Vec4 K{};
  int innerSpin = 0; // 1 for gauge/ghost species, 0 for matter
  std::map<std::string, std::string> other;

  static StateLabel gaugeState(Vec4 k, double spin, Vec4 K);
  static StateLabel matterState(Vec4 k, double spin, Vec4 K);
};

// momentum-space propagators and kernels; momenta appear symbolically by leg tag
TensorExpr gaugePropagator(int tag, const std::string& mu, const std::string& nu,
                           const std::string& al, const std::string& be);
TensorExpr ghostPropagator(int tag, const std::string& ga, const std::string& de);
TensorExpr transversalDelta(int tag, const std::string& al, const std::string& be);

// vertex factors with incoming legs 1..n; slot conventions:
//   gauge leg j: spacetime lower, inner upper
//   tri: ("mu","al"), ("nu","be"), ("rho","ga")
//   quad: + ("si","de")
//   ghost-gauge: antighost leg 1 "ga", ghost leg 2 "de", gauge leg 3 ("mu","al")
TensorExpr threeGaugeVertex();
TensorExpr fourGaugeVertex();
TensorExpr ghostGaugeVertex();

int superficialDegree(int externalLines);
int vertexDivergenceIndex(const VertexKind& v);

// |sum k| <= 1e-9 * max|k| componentwise, both spacetime and inner sets
void requireConserved(const std::vector<Vec4>& moms, const char* what);

// substitutes a rational value for a symbolic constant (e.g. xi = 1)
TensorExpr substConst(const TensorExpr& e, SymConst c, const Rational& value);

// numeric vertex/propagator value at concrete momenta and index values;
// enforces conservation for vertex kinds
std::complex<double> evaluateAt(const TensorExpr& e, const std::map<int, Vec4>& k,
                                const std::map<int, Vec4>& K,
                                const std::map<std::string, int>& freeIndices,
                                double lambda = 1.0, double xi = 1.0);

// --- tree-level assembly ------------------------------------------------

struct GraphLeg {
  int id = 0;
  bool ghost = false;       // ghost line endpoint
  Vec4 k{}, K{};            // incoming momenta
};

struct GraphVertexSpec {
  VertexTag kind = VertexTag::TriGauge;
  std::vector<int> legs;    // leg ids in vertex slot order
};

struct GraphPropagatorSpec {
  int legA = 0, legB = 0;   // joined leg ids
  bool ghost = false;
};

struct GraphDescription {
  std::vector<GraphLeg> legs;
  std::vector<GraphVertexSpec> vertices;
  std::vector<GraphPropagatorSpec> propagators;
};

// product of vertex factors and propagators with all internal indices bound;
// momentum conservation enforced at every vertex, joined legs must carry
// opposite momenta; free slots of the result belong to external legs only
TensorExpr assembleAmplitude(const GraphDescription& g);

} // namespace vpd
