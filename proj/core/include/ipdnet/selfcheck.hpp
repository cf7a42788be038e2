#pragma once

// Built-in property suites run by `ipdnet selfcheck`.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ipdnet {

struct SelfCheckOptions {
  std::uint64_t seed = 20240611;
  /// Multiplies every tolerance. 0 makes every approximate check fail,
  /// which is how the harness itself is tested.
  double tolerance_scale = 1.0;
};

struct SuiteResult {
  explicit SuiteResult(std::string suite_name = {}) : name(std::move(suite_name)) {}

  std::string name;
  int passed = 0;
  int failed = 0;
  std::vector<std::string> failures;  // first few failing property names

  bool ok() const { return failed == 0 && passed > 0; }
};

struct SelfCheckReport {
  std::vector<SuiteResult> suites;

  bool ok() const;
  void print(std::ostream& out) const;
};

SelfCheckReport run_selfcheck(const SelfCheckOptions& options = {});

}  // namespace ipdnet
