#pragma once

#include <string>
#include <vector>

#include "msso/cone.hpp"
#include "msso/convex.hpp"
#include "msso/greedy.hpp"

namespace msso {

enum class Algorithm { mp, omp, lsmp, irls, rbrs, cbcs, socp };

/// Throws Error("unknown algorithm: <name>").
Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);
std::vector<Algorithm> all_algorithms();
bool is_greedy(Algorithm a);

struct SolverConfig {
  Index k = 1;
  RelaxParams relax{};
  GreedyOptions greedy{};
  IrlsOptions irls{};
  // Required for socp; not owned.
  const ConeSolverAdapter* cone = nullptr;
};

/// Runs one algorithm. Greedy methods use k; the rest use relax. Complex
/// problems are mapped to real ones for rbrs (row stacking) and cbcs (column
/// split) and the solution is mapped back. socp without an adapter throws
/// Error("adapter missing").
SolveResult solve_with(Algorithm a, const MssoProblem& p, const SolverConfig& cfg);

}  // namespace msso
