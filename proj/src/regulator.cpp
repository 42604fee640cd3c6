#include "vpdiff/regulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

namespace vpd {

void RegulatorConfig::validate() const {
  if (lambda <= 0) throw Error("regulator: lambda must be positive");
  if (samples <= 0) throw Error("regulator: sample budget must be positive");
  if (workers <= 0) throw Error("regulator: worker count must be positive");
  Vec4 L = frame();
  double L2 = minkowskiSq(L);
  if (std::abs(L2 + 1.0 / (lambda * lambda)) > 1e-12 * (1.0 + std::abs(L2)))
    throw Error("regulator: frame vector must satisfy L^2 = -1/lambda^2");
}

bool supportPredicate(const Vec4& K) { return -minkowskiSq(K) >= 0.0; }

bool cutoffPredicate(const Vec4& K, const RegulatorConfig& cfg) {
  cfg.validate();
  double M2 = -minkowskiSq(K);
  double lam = cfg.lambda;
  if (M2 < 0 || M2 > 1.0 / (4 * lam * lam)) return false;
  // theta(-L^2 + 2 L.K) on the forward cone, theta(-L^2 - 2 L.K) on the backward
  Vec4 L = cfg.frame();
  double LK = minkowskiDot(L, K);
  double L2 = minkowskiSq(L);
  if (K[0] >= 0) return -L2 + 2 * LK >= 0;
  return -L2 - 2 * LK >= 0;
}

namespace {

constexpr int kBatches = 64;

struct SampleDraw {
  Vec4 K;
  double weight;
};

// stream id folds the purpose tag with the lambda bits so different scales
// draw independent streams
uint32_t streamIdFor(const char* purpose, double lambda) {
  uint64_t bits;
  static_assert(sizeof(bits) == sizeof(lambda));
  std::memcpy(&bits, &lambda, sizeof(bits));
  uint32_t h = fnv1a(purpose, std::strlen(purpose));
  return fnv1a(&bits, sizeof(bits), h);
}

// measure sampling: M^2 uniform on [0, 1/(4 lam^2)], invariant shell measure
// d3P/(2E) restricted to E <= 1/(2 lam), both cones with equal weight
SampleDraw drawSample(const CounterStream& cs, uint64_t i, double lam) {
  auto [u0, u1] = cs.pair(i, 0);
  auto [u2, u3] = cs.pair(i, 1);
  bool backward = cs.word(i, 2) & 1u;

  double a = 1.0 / (4 * lam * lam);
  double M2 = u0 * a;
  double Pmax = std::sqrt(std::max(0.0, a - M2));
  double r = Pmax * std::cbrt(u3);
  double z = 2 * u1 - 1;
  double phi = 2 * M_PI * u2;
  double s = std::sqrt(std::max(0.0, 1 - z * z));
  double E = std::sqrt(M2 + r * r);

  SampleDraw d;
  d.K = {backward ? -E : E, r * s * std::cos(phi), r * s * std::sin(phi), r * z};
  // importance weight: the sampled densities divided out of the target measure
  double twoPi4 = std::pow(2 * M_PI, 4);
  d.weight = E > 0 ? a * 4 * M_PI * Pmax * Pmax * Pmax / (3 * E * twoPi4) : 0.0;
  return d;
}

std::vector<std::vector<int>> symmetricKeys(int rank) {
  std::vector<std::vector<int>> keys;
  std::function<void(std::vector<int>&, int)> rec = [&](std::vector<int>& cur, int lo) {
    if ((int)cur.size() == rank) {
      keys.push_back(cur);
      return;
    }
    for (int i = lo; i < 4; ++i) {
      cur.push_back(i);
      rec(cur, i);
      cur.pop_back();
    }
  };
  std::vector<int> cur;
  rec(cur, 0);
  return keys;
}

struct BatchSums {
  std::vector<double> perKey; // one accumulator per tensor component
};

} // namespace

MomentResult regularizedMoment(int rank, const RegulatorConfig& cfg, double targetRelError) {
  cfg.validate();
  if (rank < 0 || rank > 8) throw Error("regularizedMoment: rank must be 0..8");

  auto keys = symmetricKeys(rank);
  const int nk = (int)keys.size();
  CounterStream cs{cfg.seed, streamIdFor("moment", cfg.lambda)};

  std::vector<BatchSums> batches(kBatches);
  for (auto& b : batches) b.perKey.assign(nk, 0.0);
  std::vector<long long> batchCounts(kBatches, 0);
  for (long long i = 0; i < cfg.samples; ++i) ++batchCounts[i % kBatches];

  auto workerRun = [&](int w) {
    for (int b = w; b < kBatches; b += cfg.workers) {
      auto& sums = batches[b];
      for (long long i = b; i < cfg.samples; i += kBatches) {
        SampleDraw d = drawSample(cs, (uint64_t)i, cfg.lambda);
        double base = d.weight;
        for (int k = 0; k < nk; ++k) {
          double prod = base;
          for (int idx : keys[k]) prod *= d.K[idx];
          sums.perKey[k] += prod;
        }
      }
    }
  };
  if (cfg.workers == 1) {
    workerRun(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(workerRun, w);
    for (auto& t : pool) t.join();
  }

  // batch means in fixed order
  MomentResult res;
  res.rank = rank;
  res.lambdaPower = -(4 + rank);
  std::vector<double> mean(nk, 0.0), var(nk, 0.0);
  std::vector<std::vector<double>> batchMeans(nk, std::vector<double>(kBatches, 0.0));
  for (int k = 0; k < nk; ++k) {
    for (int b = 0; b < kBatches; ++b)
      batchMeans[k][b] = batchCounts[b] ? batches[b].perKey[k] / batchCounts[b] : 0.0;
    for (int b = 0; b < kBatches; ++b) mean[k] += batchMeans[k][b];
    mean[k] /= kBatches;
    for (int b = 0; b < kBatches; ++b) {
      double d = batchMeans[k][b] - mean[k];
      var[k] += d * d;
    }
    var[k] /= (kBatches - 1);
  }
  for (int k = 0; k < nk; ++k) {
    res.components[keys[k]] = mean[k];
    res.errors[keys[k]] = std::sqrt(var[k] / kBatches);
  }
  if (rank == 0) {
    res.value = mean[0];
    res.error = std::sqrt(var[0] / kBatches);
    if (targetRelError > 0 && res.error > targetRelError * std::abs(res.value))
      throw PrecisionError("regularizedMoment: achieved relative error " +
                           std::to_string(res.error / std::abs(res.value)));
  }
  if (rank == 2) {
    // T^{ab} = A eta^{ab} + B L^a L^b with L = (1/lam, 0): A = spatial diag,
    // B/lam^2 = T^{00} + A
    double A = (res.components[{1, 1}] + res.components[{2, 2}] + res.components[{3, 3}]) / 3.0;
    double Aerr = (res.errors[{1, 1}] + res.errors[{2, 2}] + res.errors[{3, 3}]) / 3.0;
    double lam2 = cfg.lambda * cfg.lambda;
    double B = (res.components[{0, 0}] + A) * lam2;
    double Berr = (res.errors[{0, 0}] + Aerr) * lam2;
    res.etaCoeff = A;
    res.etaCoeffError = Aerr;
    res.frameCoeff = B;
    res.frameCoeffError = Berr;
    double worst = 0;
    for (auto& [key, val] : res.components) {
      double fit = 0;
      if (key[0] == key[1]) fit = key[0] == 0 ? -A + B / lam2 : A;
      worst = std::max(worst, std::abs(val - fit));
    }
    res.decompositionResidual = worst;
    if (targetRelError > 0 && Aerr > targetRelError * std::abs(A))
      throw PrecisionError("regularizedMoment: achieved relative error " +
                           std::to_string(Aerr / std::abs(A)));
  }
  return res;
}

ScalingReport scalingCovarianceCheck(int rank, double rho, const RegulatorConfig& cfg) {
  if (rho <= 0) throw Error("scalingCovarianceCheck: scale factor must be positive");
  ScalingReport rep;
  rep.rank = rank;
  rep.rho = rho;
  rep.expectedFactor = std::pow(rho, -(4.0 + rank));

  MomentResult base = regularizedMoment(rank, cfg);
  RegulatorConfig scaled = cfg;
  scaled.lambda = cfg.lambda * rho;
  scaled.frameL = {0, 0, 0, 0};
  MomentResult other = regularizedMoment(rank, scaled);

  auto pick = [&](const MomentResult& m) -> std::pair<double, double> {
    if (rank == 0) return {m.value, m.error};
    if (rank == 2) return {m.etaCoeff, m.etaCoeffError};
    auto key = m.components.begin()->first;
    return {m.components.at(key), m.errors.at(key)};
  };
  auto [b, be] = pick(base);
  auto [s, se] = pick(other);
  rep.base = b;
  rep.baseErr = be;
  rep.scaled = s;
  rep.scaledErr = se;
  double expect = b * rep.expectedFactor;
  double combined = std::sqrt(se * se + be * be * rep.expectedFactor * rep.expectedFactor);
  rep.pullSigma = combined > 0 ? (s - expect) / combined : 0.0;
  rep.pass = std::abs(rep.pullSigma) <= 3.0;
  return rep;
}

Eigen::Matrix3d matrixM(const Vec4& K) {
  if (K[0] == 0) throw DegenerateFrameError("matrixM: K^0 must not vanish");
  Eigen::Matrix3d m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      m(a, b) = (a == b ? 1.0 : 0.0) - K[a + 1] * K[b + 1] / (K[0] * K[0]);
  return m;
}

PositivityReport hamiltonianPositivitySample(const RegulatorConfig& cfg,
                                             const std::function<Vec4(long long)>& sampler) {
  cfg.validate();
  CounterStream cs{cfg.seed, streamIdFor("positivity", cfg.lambda)};
  PositivityReport rep;
  rep.samples = cfg.samples;
  rep.minValue = std::numeric_limits<double>::infinity();
  for (long long i = 0; i < cfg.samples; ++i) {
    Vec4 K = sampler ? sampler(i) : drawSample(cs, (uint64_t)i, cfg.lambda).K;
    if (!supportPredicate(K))
      throw SupportViolationError("hamiltonianPositivitySample: momentum outside the cones");
    if (K[0] == 0) continue;
    auto [u0, u1] = cs.pair(i, 3);
    auto [u2, u3] = cs.pair(i, 4);
    auto [u4, u5] = cs.pair(i, 5);
    Eigen::Vector3cd v(std::complex<double>(2 * u0 - 1, 2 * u1 - 1),
                       std::complex<double>(2 * u2 - 1, 2 * u3 - 1),
                       std::complex<double>(2 * u4 - 1, 2 * u5 - 1));
    Eigen::Matrix3d M = matrixM(K);
    double q = std::real(v.dot(M * v)); // v^dagger M v
    rep.minValue = std::min(rep.minValue, q);
  }
  rep.pass = rep.minValue >= -1e-12;
  return rep;
}

double shellQuadrature(int powE2, int powP2, double lambda) {
  // Int_reg (E^2)^a (|P|^2)^b over both cones with the measure
  // dM^2 d3P/(2E (2pi)^4); radial variable |P| keeps the integrand smooth
  const int n = 96;
  static std::vector<double> x, w;
  if (x.empty()) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) { // Newton on Legendre roots
      double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = 0;
        for (int j = 0; j < n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
        }
        double dp = n * (t * p0 - p1) / (t * t - 1);
        double t1 = t - p0 / dp;
        if (std::abs(t1 - t) < 1e-15) { t = t1; break; }
        t = t1;
      }
      x[i] = t;
      double p0 = 1, p1 = 0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      double dp = n * (t * p0 - p1) / (t * t - 1);
      w[i] = 2 / ((1 - t * t) * dp * dp);
    }
  }
  double amax = 1.0 / (4 * lambda * lambda);
  // the u-integrand carries a u log(u) endpoint: geometric panels toward u = 0
  std::vector<double> cuts{0.0};
  for (int k = 12; k >= 0; --k) cuts.push_back(amax * std::pow(0.25, k));
  double outer = 0;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    double lo = cuts[c], hi = cuts[c + 1];
    for (int i = 0; i < n; ++i) {
      double u = lo + (hi - lo) * 0.5 * (x[i] + 1);
      double wu = (hi - lo) * 0.5 * w[i];
      double pmax = std::sqrt(std::max(0.0, amax - u));
      double inner = 0;
      for (int j = 0; j < n; ++j) {
        double p = pmax * 0.5 * (x[j] + 1);
        double wp = pmax * 0.5 * w[j];
        double p2 = p * p;
        double E2 = u + p2;
        double f = p2 / (2 * std::sqrt(E2)) * std::pow(E2, powE2) * std::pow(p2, powP2);
        inner += wp * f;
      }
      outer += wu * inner;
    }
  }
  // two cones, 4 pi solid angle, (2 pi)^-4
  return 2 * 4 * M_PI * outer / std::pow(2 * M_PI, 4);
}

double omega1MomentRatio(double lambda) {
  // the scale-invariant trace measure carries lambda^4: compare
  // lambda^4 (1/4) Int M^2 against Omega1L / lambda^2
  double m2 = shellQuadrature(1, 0, lambda) - shellQuadrature(0, 1, lambda);
  double target = omega1Numeric() / (lambda * lambda);
  return 0.25 * m2 * std::pow(lambda, 4) / target;
}

} // namespace vpd
