#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "msso/model.hpp"

namespace msso {

struct SolveReport {
  std::string algorithm;
  // Objective after each outer iteration (greedy: 0.5 |r_k|^2 after each selection).
  std::vector<double> objective_trace;
  double initial_objective = 0.0;
  SparsityProfile selected;
  // Greedy selection order (0-based), repeats removed.
  std::vector<Index> selection_order;
  Index iterations = 0;
  // LSQR steps, inner fixed-point steps or interior-point iterations, summed.
  Index inner_iterations = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
};

struct SolveResult {
  SolutionG g;
  SolveReport report;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// True when every step of the trace (starting from initial_objective) rises by
/// at most rel_tol * (1 + value).
bool trace_non_increasing(const SolveReport& report, double rel_tol = 1e-10);

}  // namespace msso
