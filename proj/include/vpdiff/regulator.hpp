#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <vector>

#include "vpdiff/numeric_eval.hpp"
#include "vpdiff/philox.hpp"

namespace vpd {

struct PrecisionError : Error { using Error::Error; };
struct DegenerateFrameError : Error { using Error::Error; };
struct SupportViolationError : Error { using Error::Error; };

struct RegulatorConfig {
  double lambda = 1.0;
  long long samples = 100000;
  uint64_t seed = 20260808;
  int workers = 1;
  Vec4 frameL{0, 0, 0, 0}; // defaults to (1/lambda, 0, 0, 0)

  Vec4 frame() const {
    if (frameL[0] == 0 && frameL[1] == 0 && frameL[2] == 0 && frameL[3] == 0)
      return {1.0 / lambda, 0, 0, 0};
    return frameL;
  }
  void validate() const;
};

// -K^2 >= 0: forward and backward light cones
bool supportPredicate(const Vec4& K);

// shell mass bounded by 1/(2 lambda) and the frame-selected energy window
bool cutoffPredicate(const Vec4& K, const RegulatorConfig& cfg);

// Monte Carlo moment of the regularized shell measure.
struct MomentResult {
  int rank = 0;
  int lambdaPower = 0; // -(4 + rank)
  double value = 0, error = 0; // rank-0 volume
  // symmetric tensor components keyed by sorted index multiset
  std::map<std::vector<int>, double> components, errors;
  // rank-2 decomposition T^{ab} = etaCoeff * eta^{ab} + frameCoeff * L^a L^b
  double etaCoeff = 0, etaCoeffError = 0;
  double frameCoeff = 0, frameCoeffError = 0;
  double decompositionResidual = 0; // largest component deviation from the fit
};

MomentResult regularizedMoment(int rank, const RegulatorConfig& cfg,
                               double targetRelError = 0.0);

struct ScalingReport {
  int rank = 0;
  double rho = 1;
  double base = 0, baseErr = 0;
  double scaled = 0, scaledErr = 0;
  double expectedFactor = 0; // rho^{-(4+rank)}
  double pullSigma = 0;
  bool pass = false;
};

// moment(rank, rho*lambda) vs rho^{-(4+rank)} moment(rank, lambda) within the
// combined statistical error; independent sampling streams per lambda
ScalingReport scalingCovarianceCheck(int rank, double rho, const RegulatorConfig& cfg);

// M_ab = delta_ab - K_a K_b / (K_0)^2
Eigen::Matrix3d matrixM(const Vec4& K);

struct PositivityReport {
  double minValue = 0;
  long long samples = 0;
  bool pass = false;
};

// v* M(K) v over sampled supported momenta and random complex triples
PositivityReport hamiltonianPositivitySample(
    const RegulatorConfig& cfg,
    const std::function<Vec4(long long)>& sampler = nullptr);

// deterministic Gauss-Legendre quadrature of the shell measure for
// integrands (E^2)^a (|P|^2)^b; the independent oracle behind the golden
// constants
double shellQuadrature(int powE2, int powP2, double lambda);

// measured second-moment reduction against the named ledger constant:
// (1/4) * Int_reg M^2 compared to Omega1L / lambda^2 (quadrature-based)
double omega1MomentRatio(double lambda);

inline double omega1Numeric() { return 1.0 / (720.0 * 64.0 * M_PI * M_PI * M_PI); }

} // namespace vpd
