#include <doctest.h>

#include <cmath>

#include "msso/convex.hpp"
#include "test_support.hpp"

using namespace msso;
using msso::test::planted_problem;
using msso::test::random_problem;
using msso::test::random_real;

namespace {

// Accelerated proximal gradient with group soft-thresholding on the real
// column-stacked form; an independent minimizer of the relaxed objective.
RealMatrix fista_oracle(const MssoProblem& p, double lambda, int iters = 20000) {
  const RealMatrix c = p.column_stacked().real();
  const RealVector d = p.observation().real();
  const Index n_rows = p.N();
  const Index width = p.P();
  const double step = 1.0 / std::pow(max_singular_value(c), 2);
  RealVector x = RealVector::Zero(c.cols());
  RealVector y = x;
  double t = 1.0;
  for (int it = 0; it < iters; ++it) {
    RealVector z = y - step * (c.transpose() * (c * y - d));
    for (Index n = 0; n < n_rows; ++n) {
      auto seg = z.segment(n * width, width);
      const double norm = seg.norm();
      seg *= norm > step * lambda ? 1.0 - step * lambda / norm : 0.0;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    x = std::move(z);
    t = t_next;
  }
  RealMatrix g(n_rows, width);
  for (Index n = 0; n < n_rows; ++n) g.row(n) = x.segment(n * width, width).transpose();
  return g;
}

// Scalar coordinate descent for the P = 1 real case (soft thresholding per entry).
RealVector coordinate_descent_oracle(const RealMatrix& f, const RealVector& d, double lambda) {
  RealVector x = RealVector::Zero(f.cols());
  RealVector r = d;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    for (Index n = 0; n < f.cols(); ++n) {
      const double a = f.col(n).squaredNorm();
      const double rho = f.col(n).dot(r) + a * x(n);
      const double next = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / a;
      r -= f.col(n) * (next - x(n));
      x(n) = next;
    }
  }
  return x;
}

RelaxParams tight(double lambda) {
  RelaxParams params;
  params.lambda = lambda;
  params.delta_outer = 1e-14;
  params.delta_inner = 1e-14;
  params.max_outer = 20000;
  params.max_inner = 200;
  return params;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("irls weights") {
  SolutionG g(1, 2);
  g << 3.0, 4.0;
  const RealVector w = irls_weights(g, 0.0);
  CHECK(w(0) == doctest::Approx(0.4));
  CHECK(w(1) == doctest::Approx(0.4));
  const RealVector z = irls_weights(SolutionG::Zero(2, 3), 1e-6);
  CHECK(z.size() == 6);
  for (Index i = 0; i < 6; ++i) CHECK(z(i) == doctest::Approx(2e6));

  const SolutionG h = msso::test::random_complex(7, 3, 5);
  const double eps = 1e-9;
  const double lambda = 0.6;
  const DenseVector ht = stack_rows(h);
  const RealVector wt = irls_weights(h, eps);
  const double surrogate = 0.5 * lambda * (ht.adjoint() * wt.cast<Complex>().asDiagonal() * ht)(0, 0).real();
  CHECK(std::abs(surrogate - lambda * s_norm(h)) <= eps * 7 * lambda + 1e-14);
}

TEST_CASE("line search") {
  const double tol = 1e-6;
  const double mu = line_search_mu([](double m) { return (m - 0.3) * (m - 0.3) + 1.0; }, tol);
  CHECK(std::abs(mu - 0.3) < tol);
  CHECK(line_search_mu([](double m) { return m + std::exp(m); }) == 0.0);
  CHECK(line_search_mu([](double m) { return -m; }) == doctest::Approx(1.0).epsilon(1e-6));

  const MssoProblem p = random_problem(6, 5, 2, 3);
  const SolutionG a = msso::test::random_complex(5, 2, 4).real().cast<Complex>();
  const SolutionG b = msso::test::random_complex(5, 2, 6).real().cast<Complex>();
  auto f = [&](double m) { return objective(p, (1.0 - m) * a + m * b, 0.9); };
  const double best = line_search_mu(f);
  CHECK(f(best) <= f(0.0));
  CHECK(f(best) <= f(1.0));
  double grid_min = 1e300;
  for (int i = 0; i <= 10000; ++i) grid_min = std::min(grid_min, f(i / 10000.0));
  CHECK(f(best) <= grid_min + 1e-8);
}

TEST_CASE("irls: lambda = 0 and zero data") {
  const MssoProblem p = random_problem(6, 8, 2, 7, true);
  RelaxParams params;
  params.lambda = 0.0;
  const SolveResult res = irls(p, params);
  const DenseMatrix c = p.column_stacked();
  const DenseVector h0 = pinv(c) * p.observation();
  const double ls = 0.5 * (p.observation() - c * h0).squaredNorm();
  CHECK(res.report.iterations == 1);
  CHECK(std::abs(objective(p, res.g, 0.0) - ls) < 1e-10);
  CHECK(std::abs(res.report.objective_trace.back() - ls) < 1e-10);

  const MssoProblem zero(DenseVector::Zero(4), {msso::test::random_complex(4, 3, 8)});
  RelaxParams zp;
  zp.lambda = 0.5;
  const SolveResult zr = irls(zero, zp);
  CHECK(zr.g.norm() == 0.0);
  CHECK(zr.report.converged);
}

TEST_CASE("irls matches a coordinate-descent oracle on a small real problem") {
  const MssoProblem p = random_problem(6, 4, 1, 9);
  const double lambda = 0.05;
  const RealVector x = coordinate_descent_oracle(p.system(0).real(), p.observation().real(), lambda);
  const double oracle = objective(p, SolutionG(x.cast<Complex>()), lambda);
  RelaxParams params;
  params.lambda = lambda;
  params.delta_outer = 1e-12;
  params.max_outer = 5000;
  const SolveResult res = irls(p, params);
  CHECK(rel(objective(p, res.g, lambda), oracle) < 1e-4);
  CHECK(trace_non_increasing(res.report));
}

TEST_CASE("irls ones initialization is available") {
  const MssoProblem p = random_problem(8, 6, 2, 10);
  RelaxParams params;
  params.lambda = 0.2;
  IrlsOptions opts;
  opts.init = IrlsInit::ones;
  const SolveResult res = irls(p, params, opts);
  CHECK(trace_non_increasing(res.report));
  CHECK(res.report.initial_objective == doctest::Approx(objective(p, SolutionG::Ones(6, 2), 0.2)));
}

TEST_CASE("rbrs row solve") {
  SUBCASE("lambda = 0 with orthonormal columns is a single inner product") {
    Eigen::HouseholderQR<RealMatrix> qr(random_real(6, 3, 11));
    const RealMatrix c = qr.householderQ() * RealMatrix::Identity(6, 3);
    const RealVector r = random_real(6, 1, 12);
    Index its = 0;
    const RealVector x = rbrs_row_solve(c, c.transpose() * c, r, 0.0, 1e-8, 100, 1e-5,
                                        RealVector::Zero(3), &its);
    CHECK(its == 1);
    CHECK((x - c.transpose() * r).norm() < 1e-12);
  }
  SUBCASE("matches a one-dimensional search over the shrinkage path") {
    for (std::uint64_t seed = 13; seed < 18; ++seed) {
      const RealMatrix c = random_real(7, 3, seed);
      const RealVector r = random_real(7, 1, seed + 100);
      const RealMatrix gram = c.transpose() * c;
      const double lambda = 0.5 * (c.transpose() * r).norm();
      auto fr = [&](const RealVector& x) { return 0.5 * (r - c * x).squaredNorm() + lambda * x.norm(); };
      // The minimizer lies on x(mu) = (C^T C + mu I)^{-1} C^T r for some mu >= 0.
      auto along = [&](double log_mu) {
        RealMatrix lhs = gram;
        lhs.diagonal().array() += std::exp(log_mu);
        return fr(lhs.ldlt().solve(c.transpose() * r));
      };
      double lo = -20.0, hi = 20.0;
      for (int it = 0; it < 200; ++it) {
        const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
        if (along(a) < along(b)) hi = b; else lo = a;
      }
      const double oracle = along(0.5 * (lo + hi));
      const RealVector x = rbrs_row_solve(c, gram, r, lambda, 1e-12, 10000, 0.0, RealVector::Zero(3));
      CHECK(std::abs(fr(x) - oracle) < 1e-6);
    }
  }
  SUBCASE("exact zero when the correlation is inside the lambda ball") {
    const RealMatrix c = random_real(5, 2, 19);
    const RealVector r = random_real(5, 1, 20);
    const double lambda = 1.01 * (c.transpose() * r).norm();
    const RealVector x = rbrs_row_solve(c, c.transpose() * c, r, lambda, 1e-8, 100, 1e-5,
                                        RealVector::Ones(2));
    CHECK(x.norm() == 0.0);
  }
  SUBCASE("lambda = 0 never worsens a start along a direction below the rank cutoff") {
    const Eigen::JacobiSVD<RealMatrix> svd(random_real(8, 3, 21), Eigen::ComputeThinU | Eigen::ComputeThinV);
    RealVector sigma(3);
    sigma << 1.0, 0.5, 1e-14;
    const RealMatrix c = svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
    const RealVector start = 1e12 * svd.matrixV().col(2);
    const RealVector r = c * start;
    auto fr = [&](const RealVector& x) { return 0.5 * (r - c * x).squaredNorm(); };
    const RealVector x = rbrs_row_solve(c, c.transpose() * c, r, 0.0, 1e-8, 100, 1e-5, start);
    CHECK(fr(x) <= fr(start));
  }
}

TEST_CASE("rbrs single row problem") {
  const MssoProblem p = random_problem(6, 1, 3, 21);
  const double lambda = 0.3;
  const SolveResult res = rbrs(p, tight(lambda));
  const RealMatrix oracle = fista_oracle(p, lambda);
  CHECK(std::abs(objective(p, res.g, lambda) - objective(p, oracle.cast<Complex>(), lambda)) < 1e-6);
}

TEST_CASE("rbrs rejects complex input") {
  const MssoProblem p = random_problem(4, 3, 2, 22, true);
  CHECK_THROWS_WITH_AS(rbrs(p, RelaxParams{}), "real-valued solver; apply stacking reduction", Error);
  CHECK_THROWS_WITH_AS(cbcs(p, RelaxParams{}), "real-valued solver; apply stacking reduction", Error);
}

TEST_CASE("rbrs recovers a planted profile for some lambda") {
  SolutionG truth;
  const std::vector<Index> rows{2, 7, 11};
  const MssoProblem p = planted_problem(16, 16, 2, rows, 23, &truth);
  const SparsityProfile target(rows);
  bool recovered = false;
  for (int i = 1; i <= 20 && !recovered; ++i) {
    RelaxParams params;
    params.lambda = 0.02 * i;
    const SolveResult res = rbrs(p, params);
    CHECK(trace_non_increasing(res.report));
    recovered = profile_of(res.g, 3) == target;
  }
  CHECK(recovered);
}

TEST_CASE("cbcs element solve") {
  CHECK(cbcs_element_solve(0.0, 0.3, 2.0, 1.0, 1e-8, 100, 1e-5, 0.7) == 0.0);
  CHECK(cbcs_element_solve(-3.0, 0.0, 2.0, 0.0, 1e-8, 100, 1e-5, 0.0) == doctest::Approx(1.5));
  CHECK(cbcs_element_solve(0.5, 0.0, 2.0, 1.0, 1e-8, 100, 1e-5, 0.4) == 0.0);
  for (double b : {0.0, 1e-3, 0.4, 2.0}) {
    for (double v : {-2.5, -0.3, 0.7, 4.0}) {
      const double alpha = 1.7;
      const double lambda = 0.2;
      const double x = cbcs_element_solve(v, b, alpha, lambda, 0.0, 100000, 0.0, 0.0);
      if (x == 0.0) {
        CHECK(b == 0.0);
        CHECK(std::abs(v) <= lambda);
        continue;
      }
      CHECK(std::abs(v + x * (alpha + lambda / std::sqrt(x * x + b))) < 1e-8);
    }
  }
}

TEST_CASE("cbcs alpha bounds the system Gram matrices") {
  const MssoProblem p = random_problem(6, 5, 3, 24);
  const double alpha = cbcs_alpha(p);
  for (const DenseMatrix& f : p.systems()) {
    const RealMatrix fr = f.real();
    const RealMatrix m = alpha * RealMatrix::Identity(5, 5) - fr.transpose() * fr;
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(m);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * alpha);
    CHECK(alpha >= max_singular_value(fr));
  }
}

TEST_CASE("relaxation solvers reach the proximal-gradient optimum") {
  for (std::uint64_t seed = 30; seed < 34; ++seed) {
    const MssoProblem p = random_problem(8, 10, 2, seed);
    const double lambda = 0.2 + 0.1 * static_cast<double>(seed - 30);
    const double oracle = objective(p, fista_oracle(p, lambda).cast<Complex>(), lambda);
    const SolveResult rb = rbrs(p, tight(lambda));
    const SolveResult cb = cbcs(p, tight(lambda));
    RelaxParams ip = tight(lambda);
    ip.max_outer = 3000;
    const SolveResult ir = irls(p, ip);
    const double f_rb = objective(p, rb.g, lambda);
    const double f_cb = objective(p, cb.g, lambda);
    const double f_ir = objective(p, ir.g, lambda);
    CHECK(rel(f_rb, oracle) < 1e-6);
    CHECK(rel(f_cb, oracle) < 1e-6);
    CHECK(rel(f_rb, f_cb) < 1e-4);
    CHECK(f_ir >= std::min(f_rb, f_cb) - 1e-8);
    CHECK(rel(f_ir, oracle) < 1e-3);
    for (const SolveResult* r : {&rb, &cb, &ir}) {
      CHECK(trace_non_increasing(r->report));
      CHECK(std::abs(r->report.objective_trace.back() - objective(p, r->g, lambda)) <
            1e-10 * (1.0 + r->report.objective_trace.back()));
    }
  }
}

TEST_CASE("default parameters keep traces monotone on complex problems via reductions") {
  const MssoProblem p = random_problem(10, 12, 2, 40, true);
  RelaxParams params;
  params.lambda = 0.4;
  const SolveResult rb = rbrs(to_real_stacked(p), params);
  const SolveResult cb = cbcs(to_real_split(p), params);
  const SolveResult ir = irls(p, params);
  CHECK(trace_non_increasing(rb.report));
  CHECK(trace_non_increasing(cb.report));
  CHECK(trace_non_increasing(ir.report));
  const double f_rb = objective(p, from_real_stacked_solution(rb.g), 0.4);
  const double f_cb = objective(p, from_real_split_solution(cb.g), 0.4);
  CHECK(rel(f_rb, f_cb) < 1e-3);
}
