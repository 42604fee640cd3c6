#pragma once

// Shared helpers for numeric cross-checks: random component tensors with the
// symmetries the fields require, plus explicit Dirac matrices.

#include <complex>
#include <map>
#include <random>

#include "vpdiff/numeric_eval.hpp"

namespace oracle {

using cd = std::complex<double>;

// Random component arrays per (kind, tag, #indices, #derivs); defined for all
// upper indices, lowered with eta per slot. FieldStrengthF gets antisymmetric
// first two slots.
struct RandomFields {
  explicit RandomFields(unsigned seed) : rng(seed) {}

  cd operator()(const vpd::FieldSymbol& f, const std::vector<int>& iv,
                const std::vector<int>& dv) {
    double sign = 1.0;
    static const double eta[4] = {-1, 1, 1, 1};
    for (size_t i = 0; i < iv.size(); ++i)
      if (f.indices[i].variance == vpd::Variance::Lower) sign *= eta[iv[i]];
    for (size_t i = 0; i < dv.size(); ++i)
      if (f.derivs[i].variance == vpd::Variance::Lower) sign *= eta[dv[i]];

    std::vector<int> key = iv;
    key.insert(key.end(), dv.begin(), dv.end());
    double anti = 1.0;
    if (f.kind == vpd::FieldKind::FieldStrengthF && key.size() >= 2) {
      if (key[0] == key[1]) return 0.0;
      if (key[0] > key[1]) {
        std::swap(key[0], key[1]);
        anti = -1.0;
      }
    }
    // derivative slots commute: order-independent lookup
    std::sort(key.begin() + iv.size(), key.end());

    auto& slot = values[cacheKey(f, key)];
    if (slot == cd(0.0, 0.0)) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      slot = cd(u(rng), u(rng));
    }
    return sign * anti * slot;
  }

private:
  static std::string cacheKey(const vpd::FieldSymbol& f, const std::vector<int>& key) {
    std::string s = vpd::kindName(f.kind);
    s += ":" + std::to_string(f.tag) + ":";
    for (int v : key) s += std::to_string(v);
    return s;
  }
  std::mt19937 rng;
  std::map<std::string, cd> values;
};

// Dirac matrices in the Weyl-type representation for the mostly-plus metric:
// {gamma^mu, gamma^nu} = 2 eta^{mu nu}, tr(gamma^mu gamma^nu) = 4 eta^{mu nu}.
struct DiracMatrices {
  cd g[4][4][4]; // g[mu][row][col]

  DiracMatrices() {
    const cd I(0, 1), O(0, 0), U(1, 0);
    // sigma and bar-sigma blocks; gamma^0 = i*[[0,1],[1,0]]-like so (g0)^2 = -1
    cd s1[2][2] = {{O, U}, {U, O}};
    cd s2[2][2] = {{O, -I}, {I, O}};
    cd s3[2][2] = {{U, O}, {O, -U}};
    auto set = [&](int mu, cd a[2][2], cd b[2][2], cd fa, cd fb) {
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) g[mu][r][c] = O;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          g[mu][r][c + 2] = fa * a[r][c];
          g[mu][r + 2][c] = fb * b[r][c];
        }
    };
    cd id[2][2] = {{U, O}, {O, U}};
    set(0, id, id, I, I);     // gamma^0: (gamma^0)^2 = -1 = eta^00
    set(1, s1, s1, I, -I);    // spatial: (gamma^i)^2 = +1
    set(2, s2, s2, I, -I);
    set(3, s3, s3, I, -I);
  }

  // tr(gamma^{mus[0]} ... )
  cd trace(const std::vector<int>& mus) const {
    cd acc[4][4], tmp[4][4];
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) acc[r][c] = r == c ? cd(1, 0) : cd(0, 0);
    for (int mu : mus) {
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
          tmp[r][c] = cd(0, 0);
          for (int m = 0; m < 4; ++m) tmp[r][c] += acc[r][m] * g[mu][m][c];
        }
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) acc[r][c] = tmp[r][c];
    }
    cd tr(0, 0);
    for (int r = 0; r < 4; ++r) tr += acc[r][r];
    return tr;
  }
};

} // namespace oracle
