#pragma once

#include <string>
#include <vector>

namespace mmaux {

struct CheckResult {
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

// Names that accept a gradient fault. Checks are listed in registry order.
std::vector<std::string> injectable_checks();

// Runs the whole self-check registry: RNG / softmax / Adam reference values,
// finite-difference gradient checks for every loss and encoder path, the
// contrastive identities, matching perturbation statistics, metric oracles,
// and the checkpoint round trip. A check never throws; failures land in the
// result row.
//
// `inject_fault` corrupts one analytic gradient coordinate inside the named
// check, which must then fail; this proves the checker can actually see a
// wrong gradient. Unknown names are a ConfigError.
std::vector<CheckResult> run_all_checks(const std::string& inject_fault = "");

}  // namespace mmaux
