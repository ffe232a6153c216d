#pragma once

#include <string>
#include <vector>

#include "msso/cone.hpp"
#include "msso/model.hpp"

namespace msso {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant suite run by `msso verify`: view/objective identities, complex
/// reductions, greedy and relaxation contracts, solver agreement, the cone
/// embedding and file round trips, on each fixture.
std::vector<CheckResult> run_invariant_suite(const std::vector<MssoProblem>& fixtures,
                                             const ConeSolverAdapter* cone);

}  // namespace msso
