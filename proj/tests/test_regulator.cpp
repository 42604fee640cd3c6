#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vpdiff/regulator.hpp"

using namespace vpd;

namespace {
RegulatorConfig quick(long long n = 200000, double lambda = 1.0) {
  RegulatorConfig c;
  c.lambda = lambda;
  c.samples = n;
  c.seed = 77;
  return c;
}
} // namespace

TEST_CASE("support predicate") {
  CHECK(supportPredicate({1, 0, 0, 0}));
  CHECK(!supportPredicate({0, 1, 0, 0}));
  CHECK(supportPredicate({1, 1, 0, 0})); // null boundary counts
}

TEST_CASE("cutoff predicate") {
  RegulatorConfig c = quick();
  CHECK(cutoffPredicate({0.25, 0, 0, 0}, c));
  CHECK(!cutoffPredicate({1.0, 0, 0, 0}, c));
  CHECK(!cutoffPredicate({0, 0.3, 0, 0}, c));
  // K -> -K symmetry and rotations about the frame axis
  Vec4 k{0.3, 0.1, 0.05, 0.2};
  CHECK(cutoffPredicate(k, c) == cutoffPredicate({-k[0], -k[1], -k[2], -k[3]}, c));
  double ct = std::cos(0.7), st = std::sin(0.7);
  Vec4 rot{k[0], ct * k[1] - st * k[2], st * k[1] + ct * k[2], k[3]};
  CHECK(cutoffPredicate(k, c) == cutoffPredicate(rot, c));
  // frame invariant violated
  RegulatorConfig bad = c;
  bad.frameL = {1, 0.5, 0, 0};
  CHECK_THROWS(cutoffPredicate(k, bad));
}

TEST_CASE("quadrature oracle against closed forms") {
  // volume: 1/(384 pi^3); quarter second mass moment: 1/(23040 pi^3)
  double V = shellQuadrature(0, 0, 1.0);
  CHECK(std::abs(V - 1.0 / (384 * M_PI * M_PI * M_PI)) < 1e-12);
  double m2 = shellQuadrature(1, 0, 1.0) - shellQuadrature(0, 1, 1.0);
  CHECK(std::abs(0.25 * m2 - 1.0 / (23040 * M_PI * M_PI * M_PI)) < 1e-14);
  // the measured reduction sits at twice the named ledger constant
  CHECK(std::abs(omega1MomentRatio(1.0) - 2.0) < 1e-9);
  CHECK(std::abs(omega1MomentRatio(2.5) - 2.0) < 1e-9);
}

TEST_CASE("volume moment matches the quadrature within errors") {
  MomentResult m = regularizedMoment(0, quick(400000));
  double V = shellQuadrature(0, 0, 1.0);
  CHECK(m.value > 0);
  CHECK(std::abs(m.value - V) < 3 * m.error);
  CHECK(m.lambdaPower == -4);
}

TEST_CASE("odd moments vanish statistically") {
  MomentResult m = regularizedMoment(1, quick(300000));
  for (auto& [key, val] : m.components) {
    double err = m.errors.at(key);
    CHECK(std::abs(val) <= 3.5 * std::max(err, 1e-18));
  }
  MomentResult m3 = regularizedMoment(3, quick(150000));
  for (auto& [key, val] : m3.components)
    CHECK(std::abs(val) <= 3.5 * std::max(m3.errors.at(key), 1e-18));
}

TEST_CASE("rank-2 moment: eta plus frame decomposition") {
  MomentResult m = regularizedMoment(2, quick(600000));
  double T11 = shellQuadrature(0, 1, 1.0) / 3.0;
  double T00 = shellQuadrature(1, 0, 1.0);
  CHECK(std::abs(m.etaCoeff - T11) < 3.5 * m.etaCoeffError);
  CHECK(std::abs(m.components.at({0, 0}) - T00) < 3.5 * m.errors.at({0, 0}));
  // the frame component is real: far more than three sigma from zero
  CHECK(m.frameCoeff > 5 * m.frameCoeffError);
  // off-diagonals consistent with zero
  CHECK(std::abs(m.components.at({0, 1})) < 3.5 * std::max(m.errors.at({0, 1}), 1e-18));
  CHECK(std::abs(m.components.at({1, 2})) < 3.5 * std::max(m.errors.at({1, 2}), 1e-18));
  // spatial isotropy about the frame axis
  CHECK(std::abs(m.components.at({1, 1}) - m.components.at({2, 2})) <
        3.5 * (m.errors.at({1, 1}) + m.errors.at({2, 2})));
}

TEST_CASE("precision guard") {
  CHECK_THROWS_AS(regularizedMoment(0, quick(2000), 1e-6), PrecisionError);
}

TEST_CASE("scaling covariance") {
  ScalingReport r1 = scalingCovarianceCheck(0, 1.0, quick(100000));
  CHECK(r1.pass);
  CHECK(r1.pullSigma == 0.0); // same scale, same stream: exact equality

  ScalingReport r2 = scalingCovarianceCheck(0, 2.0, quick(400000));
  CHECK(r2.expectedFactor == doctest::Approx(1.0 / 16));
  CHECK(r2.pass);

  ScalingReport r3 = scalingCovarianceCheck(2, 2.0, quick(400000));
  CHECK(r3.expectedFactor == doctest::Approx(std::pow(2.0, -6)));
  CHECK(r3.pass);

  ScalingReport r4 = scalingCovarianceCheck(0, 0.5, quick(400000));
  CHECK(r4.pass);
}

TEST_CASE("matrix M spectrum") {
  Eigen::Matrix3d id = matrixM({1, 0, 0, 0});
  CHECK((id - Eigen::Matrix3d::Identity()).norm() < 1e-15);

  Eigen::Matrix3d nullK = matrixM({1, 1, 0, 0});
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(nullK);
  auto ev = es.eigenvalues();
  CHECK(std::abs(ev[0] - 0.0) < 1e-14);
  CHECK(std::abs(ev[1] - 1.0) < 1e-14);
  CHECK(std::abs(ev[2] - 1.0) < 1e-14);

  CHECK_THROWS_AS(matrixM({0, 1, 0, 0}), DegenerateFrameError);

  // spectrum law on random timelike momenta
  CounterStream cs{5, 99};
  for (int i = 0; i < 10000; ++i) {
    auto [u0, u1] = cs.pair(i, 0);
    auto [u2, u3] = cs.pair(i, 1);
    Vec4 K{0.5 + u0, (2 * u1 - 1) * 0.4, (2 * u2 - 1) * 0.4, (2 * u3 - 1) * 0.4};
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> s(matrixM(K));
    auto e = s.eigenvalues();
    double third = -minkowskiSq(K) / (K[0] * K[0]);
    std::array<double, 3> want{third, 1.0, 1.0};
    std::sort(want.begin(), want.end());
    for (int j = 0; j < 3; ++j) REQUIRE(std::abs(e[j] - want[j]) < 1e-12);
  }
}

TEST_CASE("hamiltonian positivity") {
  PositivityReport rep = hamiltonianPositivitySample(quick(50000));
  CHECK(rep.pass);
  CHECK(rep.minValue >= -1e-12);

  // kernel direction of a null momentum gives zero exactly
  Vec4 nullK{1, 1, 0, 0};
  Eigen::Matrix3d M = matrixM(nullK);
  Eigen::Vector3cd kernel(1.0, 0.0, 0.0);
  CHECK(std::abs(std::real(kernel.dot(M * kernel))) < 1e-14);

  // a spacelike insertion trips the support guard
  auto badSampler = [](long long) { return Vec4{0.1, 1.0, 0, 0}; };
  CHECK_THROWS_AS(hamiltonianPositivitySample(quick(10), badSampler), SupportViolationError);
}

TEST_CASE("determinism across runs and worker counts") {
  RegulatorConfig c = quick(100000);
  MomentResult a = regularizedMoment(2, c);
  MomentResult b = regularizedMoment(2, c);
  CHECK(a.components == b.components);

  RegulatorConfig c4 = c;
  c4.workers = 4;
  MomentResult d = regularizedMoment(2, c4);
  CHECK(a.components == d.components);
}
