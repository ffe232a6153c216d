#include "msso/convex.hpp"

#include <algorithm>
#include <cmath>

namespace msso {
namespace {

constexpr Index kDirectRowSolveMaxP = 64;

void require_real(const MssoProblem& p) {
  if (!p.is_real()) throw Error("real-valued solver; apply stacking reduction");
}

void require_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lambda must be finite and >= 0");
}

bool decreased_less_than(double before, double after, double delta) {
  return before - after < delta;
}

RealMatrix real_solution(const SolutionG& g) { return g.real(); }

double penalty_rows(const RealMatrix& g) {
  double sum = 0.0;
  for (Index n = 0; n < g.rows(); ++n) sum += g.row(n).norm();
  return sum;
}

}  // namespace

SolutionG relax_initial_point(const MssoProblem& p, const RelaxParams& params) {
  if (params.initial) {
    if (params.initial->rows() != p.N() || params.initial->cols() != p.P()) {
      throw Error("initial point has wrong dimensions");
    }
    return *params.initial;
  }
  // The minimum-norm solution is invariant to column permutation, so F_tot^+ d
  // and C_tot^+ d describe the same G.
  return unstack_columns(lstsq_min_norm(p.row_stacked(), p.observation()), p.N(), p.P());
}

RealVector irls_weights(const SolutionG& g, double epsilon) {
  const Index n_rows = g.rows();
  const Index n_cols = g.cols();
  RealVector w(n_rows * n_cols);
  for (Index n = 0; n < n_rows; ++n) {
    const double value = 2.0 / (g.row(n).norm() + epsilon);
    w.segment(n * n_cols, n_cols).setConstant(value);
  }
  return w;
}

double line_search_mu(const std::function<double(double)>& f, double tol, int max_evals) {
  const double f0 = f(0.0);
  const double f1 = f(1.0);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 1.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = f(c);
  double fd = f(d);
  int evals = 4;
  while (evals < max_evals && b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  const double mid = fc <= fd ? c : d;
  const double fmid = std::min(fc, fd);
  if (fmid <= f0 && fmid <= f1) return mid;
  return f1 < f0 ? 1.0 : 0.0;
}

SolveResult irls(const MssoProblem& p, const RelaxParams& params, const IrlsOptions& opts) {
  require_lambda(params.lambda);
  Stopwatch clock;
  const double lambda = params.lambda;
  const double eps = resolve_epsilon(params, p);
  const Index n_rows = p.N();
  const Index n_cols = p.P();
  const DenseMatrix c_tot = p.column_stacked();
  const DenseVector& d = p.observation();

  SolutionG g;
  if (params.initial) {
    g = relax_initial_point(p, params);
  } else if (opts.init == IrlsInit::ones) {
    g = SolutionG::Ones(n_rows, n_cols);
  } else {
    g = unstack_rows(lstsq_min_norm(c_tot, d), n_rows, n_cols);
  }
  DenseVector h = stack_rows(g);
  DenseVector r = d - c_tot * h;

  auto penalty = [&](const DenseVector& x) {
    double sum = 0.0;
    for (Index n = 0; n < n_rows; ++n) sum += x.segment(n * n_cols, n_cols).norm();
    return sum;
  };

  SolveReport report;
  report.algorithm = "irls";
  double f = 0.5 * r.squaredNorm() + lambda * penalty(h);
  report.initial_objective = f;

  for (Index k = 1; k <= params.max_outer; ++k) {
    const RealVector w = irls_weights(unstack_rows(h, n_rows, n_cols), eps);
    const RealVector w_inv_sqrt = w.cwiseInverse().cwiseSqrt();
    const DenseMatrix a = c_tot * w_inv_sqrt.cast<Complex>().asDiagonal();
    // With W_n = 2 / |h_n| the quadratic 0.5 lambda h^H W h matches the penalty in
    // value but doubles its gradient; halving the Tikhonov weight makes the
    // step minimize a majorizer of the objective.
    const LsqrResult sol = lsqr_damped(a, d, 0.5 * lambda, opts.lsqr);
    report.inner_iterations += sol.iterations;
    const DenseVector h_tmp = w_inv_sqrt.cast<Complex>().cwiseProduct(sol.x);
    const DenseVector r_tmp = d - c_tot * h_tmp;

    auto along = [&](double mu) {
      const DenseVector rm = (1.0 - mu) * r + mu * r_tmp;
      const DenseVector hm = (1.0 - mu) * h + mu * h_tmp;
      return 0.5 * rm.squaredNorm() + lambda * penalty(hm);
    };
    const double mu = line_search_mu(along, 1e-10, opts.line_search_evals);
    h = (1.0 - mu) * h + mu * h_tmp;
    r = d - c_tot * h;
    const double f_new = 0.5 * r.squaredNorm() + lambda * penalty(h);
    report.objective_trace.push_back(f_new);
    report.iterations = k;
    const bool done = decreased_less_than(f, f_new, params.delta_outer);
    f = f_new;
    if (done) {
      report.converged = true;
      break;
    }
  }

  SolutionG out = unstack_rows(h, n_rows, n_cols);
  report.selected = profile_of(out, n_rows);
  report.wall_time_seconds = clock.seconds();
  return {std::move(out), std::move(report)};
}

RealVector rbrs_row_solve(const RealMatrix& c, const RealMatrix& gram, const RealVector& r,
                          double lambda, double eps, Index max_iter, double delta,
                          const RealVector& x_start, Index* iterations) {
  const Index width = c.cols();
  auto row_objective = [&](const RealVector& x) {
    return 0.5 * (r - c * x).squaredNorm() + lambda * x.norm();
  };
  if (iterations) *iterations = 0;
  if (lambda == 0.0) {
    if (iterations) *iterations = 1;
    RealVector x = lstsq_min_norm(c, r);
    if (row_objective(x_start) < row_objective(x)) return x_start;
    return x;
  }
  const RealVector rhs = c.transpose() * r;
  // Zero is the exact minimizer when the correlation sits inside the lambda-ball.
  if (rhs.norm() <= lambda) return RealVector::Zero(width);

  RealVector x = x_start.norm() > 0.0 ? x_start : lstsq_min_norm(c, r);
  if (x.norm() == 0.0) return RealVector::Zero(width);
  double fx = row_objective(x);
  for (Index i = 1; i <= max_iter; ++i) {
    const double shift = lambda / (x.norm() + eps);
    RealVector next;
    if (width <= kDirectRowSolveMaxP) {
      RealMatrix lhs = gram;
      lhs.diagonal().array() += shift;
      next = lhs.llt().solve(rhs);
    } else {
      next = lsqr_damped(c.cast<Complex>(), r.cast<Complex>(), shift).x.real();
    }
    if (iterations) *iterations = i;
    const double f_next = row_objective(next);
    if (!(f_next <= fx)) break;
    const double dec = fx - f_next;
    x = std::move(next);
    fx = f_next;
    if (dec < delta) break;
  }
  if (row_objective(x_start) < fx) return x_start;
  return x;
}

SolveResult rbrs(const MssoProblem& p, const RelaxParams& params) {
  require_real(p);
  require_lambda(params.lambda);
  Stopwatch clock;
  const double lambda = params.lambda;
  const double eps = resolve_epsilon(params, p);
  const Index n_rows = p.N();
  const ColumnView view = column_view(p);
  std::vector<RealMatrix> blocks(static_cast<std::size_t>(n_rows));
  std::vector<RealMatrix> grams(static_cast<std::size_t>(n_rows));
  for (Index n = 0; n < n_rows; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    blocks[idx] = view.block(n).real();
    grams[idx] = blocks[idx].transpose() * blocks[idx];
  }
  const RealVector d = p.observation().real();

  RealMatrix g = real_solution(relax_initial_point(p, params));
  auto full_residual = [&]() {
    RealVector res = d;
    for (Index n = 0; n < n_rows; ++n) {
      res -= blocks[static_cast<std::size_t>(n)] * g.row(n).transpose();
    }
    return res;
  };
  RealVector res = full_residual();

  SolveReport report;
  report.algorithm = "rbrs";
  double f = 0.5 * res.squaredNorm() + lambda * penalty_rows(g);
  report.initial_objective = f;

  for (Index k = 1; k <= params.max_outer; ++k) {
    for (Index j = 0; j < n_rows; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      const RealVector current = g.row(j).transpose();
      const RealVector r_j = res + blocks[idx] * current;
      Index inner = 0;
      const RealVector x = rbrs_row_solve(blocks[idx], grams[idx], r_j, lambda, eps,
                                          params.max_inner, params.delta_inner, current, &inner);
      report.inner_iterations += inner;
      g.row(j) = x.transpose();
      res = r_j - blocks[idx] * x;
    }
    res = full_residual();
    const double f_new = 0.5 * res.squaredNorm() + lambda * penalty_rows(g);
    report.objective_trace.push_back(f_new);
    report.iterations = k;
    const bool done = decreased_less_than(f, f_new, params.delta_outer);
    f = f_new;
    if (done) {
      report.converged = true;
      break;
    }
  }

  SolutionG out = g.cast<Complex>();
  report.selected = profile_of(out, n_rows);
  report.wall_time_seconds = clock.seconds();
  return {std::move(out), std::move(report)};
}

double cbcs_alpha(const MssoProblem& p) {
  double sigma = 0.0;
  for (const DenseMatrix& f : p.systems()) sigma = std::max(sigma, max_singular_value(f));
  if (sigma == 0.0) return 1.0;
  return std::max(sigma, sigma * sigma);
}

double cbcs_element_solve(double v, double b, double alpha, double lambda, double eps,
                          Index max_iter, double delta, double x_start) {
  auto element_objective = [&](double x) {
    return v * x + 0.5 * alpha * x * x + lambda * std::sqrt(x * x + b);
  };
  if (lambda == 0.0) return -v / alpha;
  if (v == 0.0) return 0.0;
  if (b == 0.0 && std::abs(v) <= lambda) return 0.0;

  double x = x_start != 0.0 ? x_start : -v / alpha;
  double fx = element_objective(x);
  for (Index i = 1; i <= max_iter; ++i) {
    const double next = -v / (alpha + lambda / std::sqrt(x * x + b + eps));
    const double f_next = element_objective(next);
    if (!(f_next <= fx)) break;
    const double dec = fx - f_next;
    x = next;
    fx = f_next;
    if (dec < delta) break;
  }
  if (element_objective(x_start) < fx) return x_start;
  return x;
}

SolveResult cbcs(const MssoProblem& p, const RelaxParams& params) {
  require_real(p);
  require_lambda(params.lambda);
  Stopwatch clock;
  const double lambda = params.lambda;
  const double eps = resolve_epsilon(params, p);
  const Index n_rows = p.N();
  const Index n_cols = p.P();
  std::vector<RealMatrix> systems;
  systems.reserve(static_cast<std::size_t>(n_cols));
  for (const DenseMatrix& f : p.systems()) systems.push_back(f.real());
  const RealVector d = p.observation().real();
  const double alpha = cbcs_alpha(p);
  // The guard sits under a square root, so it enters squared to act on the
  // scale of a row norm.
  const double guard = eps * eps;

  RealMatrix g = real_solution(relax_initial_point(p, params));
  auto full_residual = [&]() {
    RealVector res = d;
    for (Index q = 0; q < n_cols; ++q) res -= systems[static_cast<std::size_t>(q)] * g.col(q);
    return res;
  };
  RealVector res = full_residual();
  RealVector row_sq = g.rowwise().squaredNorm();
  auto penalty = [&](const RealVector& sq) { return sq.cwiseSqrt().sum(); };

  SolveReport report;
  report.algorithm = "cbcs";
  double f = 0.5 * res.squaredNorm() + lambda * penalty(row_sq);
  report.initial_objective = f;

  for (Index k = 1; k <= params.max_outer; ++k) {
    for (Index q = 0; q < n_cols; ++q) {
      const RealMatrix& fq = systems[static_cast<std::size_t>(q)];
      for (Index pass = 1; pass <= params.max_inner; ++pass) {
        const RealVector current = g.col(q);
        const RealVector r = res + fq * current;
        const RealVector b = (row_sq - current.cwiseAbs2()).cwiseMax(0.0);
        // F^T F g - alpha g - F^T r collapses to -alpha g - F^T res.
        const RealVector v = -alpha * current - fq.transpose() * res;
        RealVector x(n_rows);
        for (Index n = 0; n < n_rows; ++n) {
          x(n) = cbcs_element_solve(v(n), b(n), alpha, lambda, guard, params.max_inner,
                                    params.delta_inner, current(n));
        }
        report.inner_iterations += 1;
        const RealVector r_new = r - fq * x;
        const RealVector sq_new = b + x.cwiseAbs2();
        const double before = 0.5 * res.squaredNorm() + lambda * penalty(row_sq);
        const double after = 0.5 * r_new.squaredNorm() + lambda * penalty(sq_new);
        if (!(after <= before)) break;
        g.col(q) = x;
        res = r_new;
        row_sq = sq_new;
        if (decreased_less_than(before, after, params.delta_inner)) break;
      }
    }
    res = full_residual();
    row_sq = g.rowwise().squaredNorm();
    const double f_new = 0.5 * res.squaredNorm() + lambda * penalty(row_sq);
    report.objective_trace.push_back(f_new);
    report.iterations = k;
    const bool done = decreased_less_than(f, f_new, params.delta_outer);
    f = f_new;
    if (done) {
      report.converged = true;
      break;
    }
  }

  SolutionG out = g.cast<Complex>();
  report.selected = profile_of(out, n_rows);
  report.wall_time_seconds = clock.seconds();
  return {std::move(out), std::move(report)};
}

}  // namespace msso
