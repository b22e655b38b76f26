#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace soapool {

struct SelftestOptions {
  bool quick = false;
  /// Test hook: runs the NS-oracle suite with T = 1 so it must fail.
  bool break_ns = false;
  std::uint64_t seed = 0;
};

struct SuiteResult {
  std::string name;
  std::size_t passed = 0;
  std::size_t total = 0;
  std::string first_failure;  // empty when every case passed

  bool ok() const noexcept { return passed == total; }
};

/// Property suites: permutation invariance, NS vs eigen oracle, reduction
/// identity, covariance oracle, gradient checks, file round trips.
std::vector<SuiteResult> run_selftest(const SelftestOptions& opts);

}  // namespace soapool
