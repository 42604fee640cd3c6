#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vpd {

struct CheckResult {
  std::string id;
  bool pass = false;
  std::string detail;
};

struct AcceptanceOptions {
  uint64_t seed = 20260808;
  int workers = 1;
  long long regulatorSamples = 10000000;
  long long spectrumSamples = 100000;
  long long corpusSize = 500;
  std::string goldenPath = "data/golden_constants.txt";
};

// runs every acceptance criterion; deterministic for fixed options
std::vector<CheckResult> runAcceptance(const AcceptanceOptions& opt);

// canonical machine-readable report: byte-identical for identical inputs
std::string acceptanceReportJson(const std::vector<CheckResult>& results,
                                 const AcceptanceOptions& opt);

// golden-constants table: name -> (value, absolute tolerance)
std::map<std::string, std::pair<double, double>> loadGoldenConstants(const std::string& path);

// verifies the regulator quadrature against the golden table; reports each
// mismatch by name
CheckResult checkGoldenConstants(const std::string& path);

} // namespace vpd
