#include "msso/report.hpp"

#include <cmath>

namespace msso {

bool trace_non_increasing(const SolveReport& report, double rel_tol) {
  double prev = report.initial_objective;
  for (double value : report.objective_trace) {
    if (!std::isfinite(value)) return false;
    if (value > prev + rel_tol * (1.0 + std::abs(prev))) return false;
    prev = value;
  }
  return true;
}

}  // namespace msso
