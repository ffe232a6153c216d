#include "msso/solvers.hpp"

#include <array>

namespace msso {
namespace {

constexpr std::array<const char*, 7> kNames = {"mp", "omp", "lsmp", "irls", "rbrs", "cbcs", "socp"};

template <class Solve, class ToReal, class FromReal>
SolveResult via_real(const MssoProblem& p, const RelaxParams& params, Solve solve,
                     MssoProblem (*reduce)(const MssoProblem&), ToReal to_real,
                     FromReal from_real) {
  if (p.is_real()) return solve(p, params);
  const MssoProblem real = reduce(p);
  RelaxParams mapped = params;
  if (params.initial) mapped.initial = to_real(*params.initial);
  SolveResult out = solve(real, mapped);
  out.g = from_real(out.g);
  out.report.selected = profile_of(out.g, p.N());
  return out;
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (name == kNames[i]) return static_cast<Algorithm>(i);
  }
  throw Error("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) { return kNames[static_cast<std::size_t>(a)]; }

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::mp,   Algorithm::omp,  Algorithm::lsmp, Algorithm::irls,
          Algorithm::rbrs, Algorithm::cbcs, Algorithm::socp};
}

bool is_greedy(Algorithm a) {
  return a == Algorithm::mp || a == Algorithm::omp || a == Algorithm::lsmp;
}

SolveResult solve_with(Algorithm a, const MssoProblem& p, const SolverConfig& cfg) {
  switch (a) {
    case Algorithm::mp:
      return run_mp(p, cfg.k, cfg.greedy);
    case Algorithm::omp:
      return run_omp(p, cfg.k, cfg.greedy);
    case Algorithm::lsmp:
      return run_lsmp(p, cfg.k, cfg.greedy);
    case Algorithm::irls:
      return irls(p, cfg.relax, cfg.irls);
    case Algorithm::rbrs:
      return via_real(
          p, cfg.relax, [](const MssoProblem& q, const RelaxParams& r) { return rbrs(q, r); },
          &to_real_stacked, &to_real_stacked_solution, &from_real_stacked_solution);
    case Algorithm::cbcs:
      return via_real(
          p, cfg.relax, [](const MssoProblem& q, const RelaxParams& r) { return cbcs(q, r); },
          &to_real_split, &to_real_split_solution, &from_real_split_solution);
    case Algorithm::socp:
      if (cfg.cone == nullptr) throw Error("adapter missing");
      return run_socp(p, cfg.relax.lambda, *cfg.cone);
  }
  throw Error("unknown algorithm");
}

}  // namespace msso
