#pragma once

#include <string>
#include <vector>

#include "vpdiff/index.hpp"

namespace vpd {

enum class FieldKind {
  GaugeA,            // A_mu^alpha
  GhostOmega,        // omega^delta
  AntighostOmegaStar,// omega*_gamma
  AuxiliaryH,        // h_gamma
  MatterPsi,         // psi (inner scalar placeholder; parity via flag)
  FieldStrengthF,    // F_mu_nu^alpha, antisymmetric in the two spacetime slots
  GenericB,          // fluctuation coefficient B_rho (matrix-valued)
  GenericC,          // fluctuation coefficient C (matrix-valued)
  GenericM,          // inner-form coefficient M_ab (matrix-valued)
  GenericN,          // inner-form coefficient N_a (matrix-valued)
  GenericE,          // covariant-form coefficient E (matrix-valued)
  GenericCalA,       // covariant-form gauge operator coefficient A_mu (matrix-valued)
  MomentumK,         // inner momentum K_tag
  MomentumSmallK,    // spacetime momentum k_tag
  MetricEta,         // eta with two slots (spacetime or inner)
  GammaMatrix,       // gamma^mu with spinor (row, col) slots
  NablaOp,           // inner-derivative operator factor acting rightward
  BrstTheta,         // anticommuting BRST parameter
  BrstThetaPrime     // second anticommuting parameter for two-parameter checks
};

inline const char* kindName(FieldKind k) {
  switch (k) {
    case FieldKind::GaugeA: return "A";
    case FieldKind::GhostOmega: return "om";
    case FieldKind::AntighostOmegaStar: return "omst";
    case FieldKind::AuxiliaryH: return "h";
    case FieldKind::MatterPsi: return "psi";
    case FieldKind::FieldStrengthF: return "F";
    case FieldKind::GenericB: return "B";
    case FieldKind::GenericC: return "C";
    case FieldKind::GenericM: return "M";
    case FieldKind::GenericN: return "N";
    case FieldKind::GenericE: return "E";
    case FieldKind::GenericCalA: return "calA";
    case FieldKind::MomentumK: return "K";
    case FieldKind::MomentumSmallK: return "k";
    case FieldKind::MetricEta: return "eta";
    case FieldKind::GammaMatrix: return "gam";
    case FieldKind::NablaOp: return "nab";
    case FieldKind::BrstTheta: return "th";
    case FieldKind::BrstThetaPrime: return "thp";
  }
  return "?";
}

FieldKind kindFromName(const std::string& s);

// One multiplicative factor of a tensor monomial.
struct FieldSymbol {
  FieldKind kind = FieldKind::GenericC;
  int tag = 0;
  std::vector<IndexSlot> indices; // signature slots, order fixed per kind
  std::vector<IndexSlot> derivs;  // partial (spacetime) / nabla (inner) derivative slots
  bool odd = false;
  int ghost = 0;
  bool matrixValued = false;

  bool operator==(const FieldSymbol& o) const {
    return kind == o.kind && tag == o.tag && indices == o.indices && derivs == o.derivs &&
           odd == o.odd && ghost == o.ghost && matrixValued == o.matrixValued;
  }
};

// Factories fixing parity, ghost number and commutativity per species.
inline FieldSymbol makeField(FieldKind kind, std::vector<IndexSlot> idx, int tag = 0) {
  FieldSymbol f;
  f.kind = kind;
  f.tag = tag;
  f.indices = std::move(idx);
  switch (kind) {
    case FieldKind::GhostOmega:
      f.odd = true;
      f.ghost = 1;
      break;
    case FieldKind::AntighostOmegaStar:
      f.odd = true;
      f.ghost = -1;
      break;
    case FieldKind::BrstTheta:
    case FieldKind::BrstThetaPrime:
      f.odd = true;
      f.ghost = -1;
      break;
    case FieldKind::GenericB:
    case FieldKind::GenericC:
    case FieldKind::GenericM:
    case FieldKind::GenericN:
    case FieldKind::GenericE:
    case FieldKind::GenericCalA:
    case FieldKind::GammaMatrix:
      f.matrixValued = true;
      break;
    default:
      break;
  }
  return f;
}

inline FieldSymbol metric(IndexSlot a, IndexSlot b) {
  if (a.space != b.space) throw IndexSpaceError("metric slots must share a space");
  if (a.space != Space::Spacetime && a.space != Space::Inner)
    throw IndexSpaceError("metric defined for spacetime and inner spaces only");
  return makeField(FieldKind::MetricEta, {std::move(a), std::move(b)});
}

inline FieldSymbol momentumK(int tag, IndexSlot slot) {
  if (slot.space != Space::Inner) throw IndexSpaceError("K momentum carries an inner index");
  return makeField(FieldKind::MomentumK, {std::move(slot)}, tag);
}

inline FieldSymbol momentumk(int tag, IndexSlot slot) {
  if (slot.space != Space::Spacetime) throw IndexSpaceError("k momentum carries a spacetime index");
  return makeField(FieldKind::MomentumSmallK, {std::move(slot)}, tag);
}

inline FieldSymbol nablaOp(IndexSlot slot) {
  if (slot.space != Space::Inner) throw IndexSpaceError("nabla operator carries an inner index");
  return makeField(FieldKind::NablaOp, {std::move(slot)});
}

// gamma^mu with spinor chain slots (row lower, column upper)
inline FieldSymbol gammaMatrix(IndexSlot mu, IndexSlot row, IndexSlot col) {
  if (mu.space != Space::Spacetime || row.space != Space::Spinor || col.space != Space::Spinor)
    throw IndexSpaceError("gamma matrix expects (spacetime, spinor, spinor) slots");
  return makeField(FieldKind::GammaMatrix, {std::move(mu), std::move(row), std::move(col)});
}

} // namespace vpd
