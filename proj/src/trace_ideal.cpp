#include "vpdiff/trace_ideal.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace vpd {

bool hasOwnDivergence(const TensorMonomial& m, const std::set<FieldKind>& kinds) {
  for (const auto& f : m.factors) {
    if (!kinds.count(f.kind)) continue;
    for (const auto& d : f.derivs) {
      if (d.space != Space::Inner || !d.dummy) continue;
      for (const auto& s : f.indices)
        if (s.space == Space::Inner && s.dummy && s.label == d.label) return true;
    }
  }
  return false;
}

namespace {

struct Reducer {
  const ReductionOptions& opt;
  std::map<std::string, TensorMonomial> shapes; // canonical factor key -> representative
  std::deque<std::string> work;                 // shapes whose relations are pending
  // rows keyed by canonical shape key: pivot order independent of discovery order
  std::map<std::string, std::map<std::string, Rational>> pivots;

  explicit Reducer(const ReductionOptions& o) : opt(o) {}

  TensorExpr normalizeTerm(const TensorMonomial& m) {
    TensorExpr e = canonicalize(TensorExpr::fromMonomial(m));
    if (opt.postNormalize) e = opt.postNormalize(e);
    return e;
  }

  std::map<std::string, Rational> toVector(const TensorExpr& e) {
    std::map<std::string, Rational> v;
    for (const auto& t : e.terms) {
      if (hasOwnDivergence(t, opt.divergenceFree)) continue;
      std::string key = monomialKey(t);
      if (!shapes.count(key)) {
        TensorMonomial rep = t;
        rep.coeff.rat = Rational(1);
        shapes.emplace(key, rep);
        work.push_back(key);
      }
      auto vit = v.find(key);
      if (vit == v.end())
        v.emplace(key, t.coeff.rat);
      else {
        vit->second += t.coeff.rat;
        if (vit->second.isZero()) v.erase(vit);
      }
    }
    return v;
  }

  void addRelation(std::map<std::string, Rational> row) {
    while (!row.empty()) {
      const std::string& lead = row.begin()->first;
      auto p = pivots.find(lead);
      if (p == pivots.end()) break;
      Rational f = row.begin()->second;
      for (const auto& [idx, c] : p->second) {
        auto it = row.find(idx);
        Rational nv = (it == row.end() ? Rational(0) : it->second) - f * c;
        if (nv.isZero()) {
          if (it != row.end()) row.erase(it);
        } else {
          row[idx] = nv;
        }
      }
    }
    if (row.empty()) return;
    Rational lead = row.begin()->second;
    for (auto& [idx, c] : row) c /= lead;
    std::string leadIdx = row.begin()->first;
    pivots.emplace(std::move(leadIdx), std::move(row));
  }

  void generateRelations(const std::string& key) {
    const TensorMonomial shape = shapes.at(key);

    if (opt.cyclic) {
      int mvBegin = 0;
      while (mvBegin < (int)shape.factors.size() && !shape.factors[mvBegin].matrixValued)
        ++mvBegin;
      int n = (int)shape.factors.size() - mvBegin;
      if (n >= 2) {
        TensorMonomial rot = shape;
        std::rotate(rot.factors.begin() + mvBegin, rot.factors.begin() + mvBegin + 1,
                    rot.factors.end());
        TensorExpr diff = sub(TensorExpr::fromMonomial(shape), normalizeTerm(rot));
        addRelation(toVector(diff));
      }
    }

    auto spaceEnabled = [&](Space s) {
      return (s == Space::Spacetime && opt.ibpSpacetime) || (s == Space::Inner && opt.ibpInner);
    };

    for (int fi = 0; fi < (int)shape.factors.size(); ++fi) {
      const auto& fac = shape.factors[fi];
      for (int di = 0; di < (int)fac.derivs.size(); ++di) {
        const IndexSlot d = fac.derivs[di];
        if (!d.dummy || !spaceEnabled(d.space)) continue;
        TensorMonomial parent = shape;
        parent.factors[fi].derivs.erase(parent.factors[fi].derivs.begin() + di);
        TensorExpr norm = TensorExpr::zero();
        for (int fj = 0; fj < (int)parent.factors.size(); ++fj) {
          switch (parent.factors[fj].kind) {
            case FieldKind::MetricEta:
            case FieldKind::MomentumK:
            case FieldKind::MomentumSmallK:
            case FieldKind::NablaOp:
            case FieldKind::BrstTheta:
            case FieldKind::BrstThetaPrime:
              continue;
            default:
              break;
          }
          TensorMonomial term = parent;
          term.factors[fj].derivs.push_back(d);
          norm = add(norm, normalizeTerm(term));
        }
        addRelation(toVector(norm));
      }
    }
  }

  std::map<std::string, Rational> reduce(std::map<std::string, Rational> v) {
    while (!work.empty()) {
      std::string key = work.front();
      work.pop_front();
      generateRelations(key);
    }
    bool changed = true;
    while (changed && !v.empty()) {
      changed = false;
      for (auto& [idx, coef] : v) {
        auto p = pivots.find(idx);
        if (p == pivots.end()) continue;
        Rational f = coef;
        for (const auto& [j, c] : p->second) {
          auto it = v.find(j);
          Rational nv = (it == v.end() ? Rational(0) : it->second) - f * c;
          if (nv.isZero()) {
            if (it != v.end()) v.erase(it);
          } else {
            v[j] = nv;
          }
        }
        changed = true;
        break;
      }
    }
    return v;
  }
};

} // namespace

TensorExpr reduceModulo(const TensorExpr& e, const ReductionOptions& opt) {
  TensorExpr canon = canonicalize(e);
  if (opt.postNormalize) canon = opt.postNormalize(canon);

  std::map<std::string, std::vector<TensorMonomial>> sectors;
  for (const auto& t : canon.terms) sectors[t.coeff.symbolKey()].push_back(t);

  TensorExpr out;
  for (auto& [sym, terms] : sectors) {
    Reducer red(opt);
    std::map<std::string, Rational> v;
    ScalarCoeff proto = terms.front().coeff;
    for (const auto& t : terms) {
      for (auto& [id, r] : red.toVector(canonicalize(TensorExpr::fromMonomial(t)))) {
        auto it = v.find(id);
        if (it == v.end())
          v.emplace(id, r);
        else {
          it->second += r;
          if (it->second.isZero()) v.erase(it);
        }
      }
    }
    auto residual = red.reduce(std::move(v));
    for (auto& [id, r] : residual) {
      TensorMonomial m = red.shapes.at(id);
      m.coeff = proto;
      m.coeff.rat = r;
      out.terms.push_back(std::move(m));
    }
  }
  return canonicalize(out);
}

bool equalModulo(const TensorExpr& a, const TensorExpr& b, const ReductionOptions& opt) {
  return reduceModulo(sub(a, b), opt).isZero();
}

} // namespace vpd

namespace vpd {

std::vector<std::vector<std::pair<std::string, Rational>>> reduceJointly(
    const std::vector<TensorExpr>& es, const ReductionOptions& opt) {
  Reducer red(opt);
  std::vector<std::map<std::string, Rational>> vecs;
  for (const auto& e : es) {
    TensorExpr canon = canonicalize(e);
    if (opt.postNormalize) canon = opt.postNormalize(canon);
    std::map<std::string, Rational> v;
    for (const auto& t : canon.terms) {
      for (auto& [id, r] : red.toVector(canonicalize(TensorExpr::fromMonomial(t)))) {
        auto it = v.find(id);
        if (it == v.end())
          v.emplace(id, r);
        else {
          it->second += r;
          if (it->second.isZero()) v.erase(it);
        }
      }
    }
    vecs.push_back(std::move(v));
  }
  std::vector<std::vector<std::pair<std::string, Rational>>> out;
  for (auto& v : vecs) {
    auto residual = red.reduce(v);
    std::vector<std::pair<std::string, Rational>> res;
    for (auto& [id, r] : residual) res.emplace_back(id, r);
    out.push_back(std::move(res));
  }
  return out;
}

} // namespace vpd
