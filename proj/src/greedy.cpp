#include "msso/greedy.hpp"

#include <algorithm>

namespace msso {
namespace {

void require_k(Index k) {
  if (k < 1) throw Error("greedy solvers need K >= 1");
}

SolveResult finish(const MssoProblem& p, const ColumnView& view, SolveReport report,
                   const Stopwatch& clock) {
  report.selected = SparsityProfile(report.selection_order);
  SolveResult out{retune(p, view, report.selected), std::move(report)};
  out.report.wall_time_seconds = clock.seconds();
  return out;
}

}  // namespace

Index mp_select(const ProjectorBank& bank, const DenseVector& r,
                const std::vector<char>& excluded, Exec exec) {
  if (r.squaredNorm() == 0.0) throw Error("zero residual");
  const RealVector energies = block_energies(bank, r, excluded, exec);
  return argmax_lowest(energies, excluded);
}

SolutionG finalize_weights(const MssoProblem& p, const SparsityProfile& profile) {
  return retune(p, profile);
}

SolveResult run_mp(const MssoProblem& p, Index k, const GreedyOptions& opts) {
  require_k(k);
  Stopwatch clock;
  const ColumnView view = column_view(p);
  SolveReport report;
  report.algorithm = "mp";
  const double dnorm = p.observation().norm();
  report.initial_objective = 0.5 * dnorm * dnorm;
  report.converged = true;
  if (dnorm == 0.0) return finish(p, view, std::move(report), clock);

  const ProjectorBank bank(view);
  std::vector<char> chosen(static_cast<std::size_t>(p.N()), 0);
  DenseVector r = p.observation();
  for (Index it = 1; it <= k; ++it) {
    const Index q = mp_select(bank, r, {}, opts.exec);
    if (!chosen[static_cast<std::size_t>(q)]) {
      chosen[static_cast<std::size_t>(q)] = 1;
      report.selection_order.push_back(q);
    }
    r -= bank.project(q, r);
    report.objective_trace.push_back(0.5 * r.squaredNorm());
    report.iterations = it;
    if (r.norm() <= opts.zero_tol * dnorm) break;
  }
  return finish(p, view, std::move(report), clock);
}

SolveResult run_omp(const MssoProblem& p, Index k, const GreedyOptions& opts) {
  require_k(k);
  Stopwatch clock;
  const ColumnView view = column_view(p);
  SolveReport report;
  report.algorithm = "omp";
  const DenseVector& d = p.observation();
  const double dnorm = d.norm();
  report.initial_objective = 0.5 * dnorm * dnorm;
  report.converged = true;
  if (dnorm == 0.0) return finish(p, view, std::move(report), clock);

  const ProjectorBank bank(view);
  std::vector<char> chosen(static_cast<std::size_t>(p.N()), 0);
  DenseVector r = d;
  for (Index it = 1; it <= std::min(k, p.N()); ++it) {
    const Index q = mp_select(bank, r, chosen, opts.exec);
    if (q < 0) break;
    chosen[static_cast<std::size_t>(q)] = 1;
    report.selection_order.push_back(q);
    const DenseMatrix s = stack_blocks(view, report.selection_order);
    r = d - s * lstsq_min_norm(s, d);
    report.objective_trace.push_back(0.5 * r.squaredNorm());
    report.iterations = it;
    if (r.norm() <= opts.zero_tol * dnorm) break;
  }
  return finish(p, view, std::move(report), clock);
}

SolveResult run_lsmp(const MssoProblem& p, Index k, const GreedyOptions& opts) {
  require_k(k);
  Stopwatch clock;
  const ColumnView view = column_view(p);
  SolveReport report;
  report.algorithm = "lsmp";
  const DenseVector& d = p.observation();
  const double dnorm = d.norm();
  report.initial_objective = 0.5 * dnorm * dnorm;
  report.converged = true;
  if (dnorm == 0.0) return finish(p, view, std::move(report), clock);

  LsmpScorer scorer(view, d);
  std::vector<char> chosen(static_cast<std::size_t>(p.N()), 0);
  for (Index it = 1; it <= std::min(k, p.N()); ++it) {
    const RealVector scores = scorer.scores(chosen, opts.exec);
    const Index q = argmax_lowest(scores, chosen);
    if (q < 0) break;
    chosen[static_cast<std::size_t>(q)] = 1;
    report.selection_order.push_back(q);
    scorer.accept(q, opts.exec);
    const DenseVector& r = scorer.residual();
    report.objective_trace.push_back(0.5 * r.squaredNorm());
    report.iterations = it;
    if (r.norm() <= opts.zero_tol * dnorm) break;
  }
  return finish(p, view, std::move(report), clock);
}

}  // namespace msso
