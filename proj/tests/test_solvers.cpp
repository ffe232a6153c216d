#include <doctest.h>

#include <cmath>

#include "msso/solvers.hpp"
#include "test_support.hpp"

using namespace msso;
using msso::test::random_problem;

namespace {

// Proximal gradient with complex group soft-thresholding on C_tot.
SolutionG complex_oracle(const MssoProblem& p, double lambda, int iters = 30000) {
  const DenseMatrix c = p.column_stacked();
  const DenseVector& d = p.observation();
  const double step = 1.0 / std::pow(max_singular_value(c), 2);
  DenseVector x = DenseVector::Zero(c.cols());
  DenseVector y = x;
  double t = 1.0;
  for (int it = 0; it < iters; ++it) {
    DenseVector z = y - step * (c.adjoint() * (c * y - d));
    for (Index n = 0; n < p.N(); ++n) {
      auto seg = z.segment(n * p.P(), p.P());
      const double norm = seg.norm();
      seg *= norm > step * lambda ? 1.0 - step * lambda / norm : 0.0;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    x = std::move(z);
    t = t_next;
  }
  return unstack_rows(x, p.N(), p.P());
}

SolverConfig tight(double lambda) {
  SolverConfig cfg;
  cfg.relax.lambda = lambda;
  cfg.relax.delta_outer = 1e-14;
  cfg.relax.delta_inner = 1e-14;
  cfg.relax.max_outer = 20000;
  cfg.relax.max_inner = 200;
  return cfg;
}

}  // namespace

TEST_CASE("algorithm registry") {
  for (Algorithm a : all_algorithms()) CHECK(parse_algorithm(algorithm_name(a)) == a);
  CHECK(all_algorithms().size() == 7);
  CHECK(algorithm_name(Algorithm::lsmp) == "lsmp");
  CHECK_THROWS_WITH_AS(parse_algorithm("lasso"), "unknown algorithm: lasso", Error);
  CHECK(is_greedy(Algorithm::omp));
  CHECK_FALSE(is_greedy(Algorithm::socp));
}

TEST_CASE("greedy dispatch honours k") {
  const MssoProblem p = random_problem(10, 14, 2, 3);
  SolverConfig cfg;
  cfg.k = 3;
  for (Algorithm a : {Algorithm::mp, Algorithm::omp, Algorithm::lsmp}) {
    const SolveResult r = solve_with(a, p, cfg);
    CHECK(r.report.algorithm == algorithm_name(a));
    CHECK(r.report.selected.size() <= 3);
  }
}

TEST_CASE("socp needs an adapter") {
  const MssoProblem p = random_problem(6, 5, 1, 4);
  CHECK_THROWS_WITH_AS(solve_with(Algorithm::socp, p, {}), "adapter missing", Error);
  const NativeConeSolver native;
  SolverConfig cfg;
  cfg.cone = &native;
  cfg.relax.lambda = 0.2;
  const SolveResult r = solve_with(Algorithm::socp, p, cfg);
  CHECK(r.g.rows() == 5);
}

TEST_CASE("complex problems reach the same minimum through every relaxation") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const MssoProblem p = random_problem(8, 6, 2, 40 + seed, true);
    const double lambda = 0.4;
    const double want = objective(p, complex_oracle(p, lambda), lambda);
    const NativeConeSolver native;
    SolverConfig cfg = tight(lambda);
    cfg.cone = &native;
    for (Algorithm a : {Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs, Algorithm::socp}) {
      CAPTURE(algorithm_name(a));
      const SolveResult r = solve_with(a, p, cfg);
      CHECK_FALSE(is_real(r.g));
      const double got = objective(p, r.g, lambda);
      CHECK(got <= want * (1 + 1e-6));
      CHECK(std::abs(got - want) <= 1e-5 * want);
      CHECK(r.report.selected == profile_of(r.g, p.N()));
      if (a != Algorithm::socp) CHECK(trace_non_increasing(r.report));
    }
  }
}

TEST_CASE("complex initial points are mapped through the reductions") {
  const MssoProblem p = random_problem(8, 6, 2, 9, true);
  SolverConfig cfg = tight(0.3);
  const SolutionG start = complex_oracle(p, 0.3);
  cfg.relax.initial = start;
  for (Algorithm a : {Algorithm::rbrs, Algorithm::cbcs}) {
    const SolveResult r = solve_with(a, p, cfg);
    CHECK(r.report.initial_objective == doctest::Approx(objective(p, start, 0.3)).epsilon(1e-12));
  }
}
