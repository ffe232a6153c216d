#include "msso/verify.hpp"

#include <cmath>
#include <cstdio>

#include "msso/harness.hpp"
#include "msso/io.hpp"

namespace msso {
namespace {

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

SolutionG random_g(Index n, Index p, std::uint64_t seed, bool complex_valued) {
  CounterRng rng(seed);
  SolutionG g(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = Complex(rng.normal(), complex_valued ? rng.normal() : 0.0);
  return g;
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const std::vector<MssoProblem>& fixtures,
                                             const ConeSolverAdapter* cone) {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };

  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const MssoProblem& p = fixtures[f];
    const std::string tag = "fixture " + std::to_string(f + 1) + ": ";
    const bool real = p.is_real();
    const SolutionG g = random_g(p.N(), p.P(), 17 + f, !real);
    const double lambda = 0.2;

    const double f_row = objective(p, g, lambda);
    const double f_col = objective_column_view(column_view(p), p.observation(), g, lambda);
    add(tag + "row and column views agree", rel_gap(f_col, f_row) <= 1e-12, "gap " + num(rel_gap(f_col, f_row)));

    if (!real) {
      const double stacked = objective(to_real_stacked(p), to_real_stacked_solution(g), lambda);
      const double split = objective(to_real_split(p), to_real_split_solution(g), lambda);
      add(tag + "real reductions preserve the objective",
          rel_gap(stacked, f_row) <= 1e-12 && rel_gap(split, f_row) <= 1e-12,
          "gaps " + num(rel_gap(stacked, f_row)) + ", " + num(rel_gap(split, f_row)));
    }

    const Index k = std::min<Index>(3, p.N());
    for (Algorithm a : {Algorithm::mp, Algorithm::omp, Algorithm::lsmp}) {
      SolverConfig cfg;
      cfg.k = k;
      const SolveResult r = solve_with(a, p, cfg);
      const bool ok = r.report.selected.size() <= static_cast<std::size_t>(k) &&
                      trace_non_increasing(r.report) && r.g == retune(p, r.report.selected);
      add(tag + algorithm_name(a) + " selects at most K rows and retunes", ok,
          std::to_string(r.report.selected.size()) + " rows");
    }

    SolverConfig tight;
    tight.relax.lambda = lambda;
    tight.relax.delta_outer = 1e-13;
    tight.relax.delta_inner = 1e-13;
    tight.relax.max_outer = 20000;
    tight.relax.max_inner = 200;
    tight.cone = cone;
    std::vector<Algorithm> relax = {Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs};
    if (cone) relax.push_back(Algorithm::socp);
    std::vector<double> values;
    for (Algorithm a : relax) {
      const SolveResult r = solve_with(a, p, tight);
      values.push_back(objective(p, r.g, lambda));
      add(tag + algorithm_name(a) + " objective trace is non-increasing",
          a == Algorithm::socp || trace_non_increasing(r.report, 1e-10),
          std::to_string(r.report.objective_trace.size()) + " steps");
    }
    const double best = *std::min_element(values.begin(), values.end());
    const double spread = (*std::max_element(values.begin() + 1, values.end()) -
                           *std::min_element(values.begin() + 1, values.end())) /
                          best;
    add(tag + "shrinkage solvers agree on the minimum", spread <= 1e-4, "relative spread " + num(spread));
    add(tag + "irls never beats the others by more than 1e-8", values[0] >= best - 1e-8 * best,
        "irls " + num(values[0]) + ", best " + num(best));

    const ConeProgram prog = build_socp(p, lambda);
    const RealVector x = embed_point(p, g);
    const double f_prog = prog.objective_value(x);
    const FeasibilityReport feas = check_feasible(prog, x, 1e-9);
    add(tag + "cone embedding matches the objective", rel_gap(f_prog, f_row) <= 1e-10,
        "gap " + num(rel_gap(f_prog, f_row)));
    add(tag + "cone embedding round trip and feasibility", extract_solution(prog, x) == g && feas.passed,
        feas.passed ? "feasible" : "violated: " + feas.violated_cone);

    const MssoProblem back = problem_from_json(problem_to_json(p));
    bool same = back.observation() == p.observation();
    for (Index q = 0; q < p.P(); ++q) same = same && back.system(q) == p.system(q);
    add(tag + "problem file round trip is exact", same, "");
  }
  return out;
}

}  // namespace msso
