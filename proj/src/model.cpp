#include "msso/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msso {

MssoProblem::MssoProblem(DenseVector d, std::vector<DenseMatrix> systems)
    : d_(std::move(d)), systems_(std::move(systems)) {
  if (systems_.empty()) throw Error("problem needs at least one system matrix");
  const Index n = systems_.front().cols();
  if (d_.size() == 0 || n == 0) throw Error("empty operand");
  for (const auto& f : systems_) {
    if (f.rows() != d_.size() || f.cols() != n) {
      throw Error("all system matrices must be M x N with M = len(d)");
    }
    if (!f.allFinite()) throw Error("system matrix has non-finite entries");
  }
  if (!d_.allFinite()) throw Error("observation has non-finite entries");
}

bool MssoProblem::is_real() const {
  if (!msso::is_real(d_)) return false;
  return std::all_of(systems_.begin(), systems_.end(),
                     [](const DenseMatrix& f) { return msso::is_real(f); });
}

DenseMatrix MssoProblem::row_stacked() const {
  DenseMatrix out(M(), N() * P());
  for (Index p = 0; p < P(); ++p) out.middleCols(p * N(), N()) = system(p);
  return out;
}

DenseMatrix MssoProblem::column_stacked() const {
  DenseMatrix out(M(), N() * P());
  for (Index n = 0; n < N(); ++n)
    for (Index p = 0; p < P(); ++p) out.col(n * P() + p) = system(p).col(n);
  return out;
}

SparsityProfile::SparsityProfile(std::vector<Index> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

bool SparsityProfile::contains(Index n) const {
  return std::binary_search(indices_.begin(), indices_.end(), n);
}

void SparsityProfile::check_range(Index n_rows) const {
  for (Index i : indices_) {
    if (i < 0 || i >= n_rows) throw Error("sparsity profile index out of range");
  }
}

double resolve_epsilon(const RelaxParams& params, const MssoProblem& p) {
  return params.epsilon > 0.0 ? params.epsilon : 1e-8 * (1.0 + p.observation().norm());
}

ColumnView column_view(const MssoProblem& p) {
  ColumnView view;
  view.blocks.reserve(static_cast<std::size_t>(p.N()));
  for (Index n = 0; n < p.N(); ++n) {
    DenseMatrix c(p.M(), p.P());
    for (Index q = 0; q < p.P(); ++q) c.col(q) = p.system(q).col(n);
    view.blocks.push_back(std::move(c));
  }
  return view;
}

MssoProblem from_column_view(const DenseVector& d, const ColumnView& view) {
  if (view.blocks.empty()) throw Error("empty column view");
  const Index m = view.block(0).rows();
  const Index np = view.block(0).cols();
  std::vector<DenseMatrix> systems(static_cast<std::size_t>(np), DenseMatrix(m, view.N()));
  for (Index n = 0; n < view.N(); ++n)
    for (Index q = 0; q < np; ++q) systems[static_cast<std::size_t>(q)].col(n) = view.block(n).col(q);
  return MssoProblem(d, std::move(systems));
}

RealVector row_norms(const SolutionG& g) { return g.rowwise().norm(); }

double s_norm(const SolutionG& g) { return row_norms(g).sum(); }

DenseVector residual(const MssoProblem& p, const SolutionG& g) {
  if (g.rows() != p.N() || g.cols() != p.P()) throw Error("residual: dimension mismatch");
  DenseVector r = p.observation();
  for (Index q = 0; q < p.P(); ++q) r.noalias() -= p.system(q) * g.col(q);
  return r;
}

double objective(const MssoProblem& p, const SolutionG& g, double lambda) {
  return 0.5 * residual(p, g).squaredNorm() + lambda * s_norm(g);
}

double objective_column_view(const ColumnView& view, const DenseVector& d, const SolutionG& g,
                             double lambda) {
  if (g.rows() != view.N()) throw Error("objective: dimension mismatch");
  DenseVector r = d;
  double penalty = 0.0;
  for (Index n = 0; n < view.N(); ++n) {
    const DenseVector h = g.row(n).transpose();
    r.noalias() -= view.block(n) * h;
    penalty += h.norm();
  }
  return 0.5 * r.squaredNorm() + lambda * penalty;
}

DenseVector stack_rows(const SolutionG& g) {
  DenseVector h(g.size());
  for (Index n = 0; n < g.rows(); ++n)
    for (Index q = 0; q < g.cols(); ++q) h(n * g.cols() + q) = g(n, q);
  return h;
}

SolutionG unstack_rows(const DenseVector& h_tot, Index n, Index p) {
  if (h_tot.size() != n * p) throw Error("unstack_rows: length mismatch");
  SolutionG g(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index q = 0; q < p; ++q) g(i, q) = h_tot(i * p + q);
  return g;
}

DenseVector stack_columns(const SolutionG& g) {
  DenseVector out(g.size());
  for (Index q = 0; q < g.cols(); ++q) out.segment(q * g.rows(), g.rows()) = g.col(q);
  return out;
}

SolutionG unstack_columns(const DenseVector& g_tot, Index n, Index p) {
  if (g_tot.size() != n * p) throw Error("unstack_columns: length mismatch");
  SolutionG g(n, p);
  for (Index q = 0; q < p; ++q) g.col(q) = g_tot.segment(q * n, n);
  return g;
}

SparsityProfile profile_of(const SolutionG& g, Index k) {
  if (k < 1 || k > g.rows()) throw Error("profile_of: K must lie in [1, N]");
  const RealVector norms = row_norms(g);
  std::vector<Index> order(static_cast<std::size_t>(g.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  // Stable sort keeps the lowest index first among equal norms.
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return norms(a) > norms(b); });
  std::vector<Index> chosen;
  for (Index i = 0; i < k; ++i) {
    const Index n = order[static_cast<std::size_t>(i)];
    if (norms(n) == 0.0) break;
    chosen.push_back(n);
  }
  return SparsityProfile(std::move(chosen));
}

double recovery_fraction(const SparsityProfile& truth, const SparsityProfile& estimate) {
  if (truth.empty()) throw Error("recovery_fraction: empty truth profile");
  std::size_t hits = 0;
  for (Index n : estimate.indices()) hits += truth.contains(n) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

DenseMatrix stack_blocks(const ColumnView& view, const std::vector<Index>& order) {
  if (order.empty()) return DenseMatrix(view.blocks.empty() ? 0 : view.block(0).rows(), 0);
  const Index m = view.block(0).rows();
  const Index np = view.block(0).cols();
  DenseMatrix s(m, np * static_cast<Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i)
    s.middleCols(static_cast<Index>(i) * np, np) = view.block(order[i]);
  return s;
}

SolutionG retune(const MssoProblem& p, const ColumnView& view, const SparsityProfile& profile) {
  profile.check_range(p.N());
  SolutionG g = SolutionG::Zero(p.N(), p.P());
  if (profile.empty()) return g;
  const DenseMatrix s = stack_blocks(view, profile.indices());
  const DenseVector x = lstsq_min_norm(s, p.observation());
  for (std::size_t i = 0; i < profile.size(); ++i)
    g.row(profile.indices()[i]) = x.segment(static_cast<Index>(i) * p.P(), p.P()).transpose();
  return g;
}

SolutionG retune(const MssoProblem& p, const SparsityProfile& profile) {
  return retune(p, column_view(p), profile);
}

namespace {

DenseVector expand_vector(const DenseVector& d) {
  DenseVector out(2 * d.size());
  out.head(d.size()) = d.real().cast<Complex>();
  out.tail(d.size()) = d.imag().cast<Complex>();
  return out;
}

// [Re F; Im F] and [-Im F; Re F].
DenseMatrix split_a(const DenseMatrix& f) {
  DenseMatrix out(2 * f.rows(), f.cols());
  out.topRows(f.rows()) = f.real().cast<Complex>();
  out.bottomRows(f.rows()) = f.imag().cast<Complex>();
  return out;
}

DenseMatrix split_b(const DenseMatrix& f) {
  DenseMatrix out(2 * f.rows(), f.cols());
  out.topRows(f.rows()) = (-f.imag()).cast<Complex>();
  out.bottomRows(f.rows()) = f.real().cast<Complex>();
  return out;
}

}  // namespace

MssoProblem to_real_stacked(const MssoProblem& p) {
  std::vector<DenseMatrix> systems;
  systems.reserve(static_cast<std::size_t>(2 * p.P()));
  for (Index q = 0; q < p.P(); ++q) systems.push_back(split_a(p.system(q)));
  for (Index q = 0; q < p.P(); ++q) systems.push_back(split_b(p.system(q)));
  return MssoProblem(expand_vector(p.observation()), std::move(systems));
}

SolutionG to_real_stacked_solution(const SolutionG& g) {
  SolutionG out(g.rows(), 2 * g.cols());
  out.leftCols(g.cols()) = g.real().cast<Complex>();
  out.rightCols(g.cols()) = g.imag().cast<Complex>();
  return out;
}

SolutionG from_real_stacked_solution(const SolutionG& g_real) {
  if (g_real.cols() % 2 != 0) throw Error("stacked solution needs an even column count");
  const Index p = g_real.cols() / 2;
  SolutionG out(g_real.rows(), p);
  for (Index q = 0; q < p; ++q)
    for (Index n = 0; n < g_real.rows(); ++n)
      out(n, q) = Complex(g_real(n, q).real(), g_real(n, p + q).real());
  return out;
}

MssoProblem to_real_split(const MssoProblem& p) {
  std::vector<DenseMatrix> systems;
  systems.reserve(static_cast<std::size_t>(2 * p.P()));
  for (Index q = 0; q < p.P(); ++q) {
    systems.push_back(split_a(p.system(q)));
    systems.push_back(split_b(p.system(q)));
  }
  return MssoProblem(expand_vector(p.observation()), std::move(systems));
}

SolutionG to_real_split_solution(const SolutionG& g) {
  SolutionG out(g.rows(), 2 * g.cols());
  for (Index q = 0; q < g.cols(); ++q) {
    out.col(2 * q) = g.col(q).real().cast<Complex>();
    out.col(2 * q + 1) = g.col(q).imag().cast<Complex>();
  }
  return out;
}

SolutionG from_real_split_solution(const SolutionG& g_real) {
  if (g_real.cols() % 2 != 0) throw Error("split solution needs an even column count");
  const Index p = g_real.cols() / 2;
  SolutionG out(g_real.rows(), p);
  for (Index q = 0; q < p; ++q)
    for (Index n = 0; n < g_real.rows(); ++n)
      out(n, q) = Complex(g_real(n, 2 * q).real(), g_real(n, 2 * q + 1).real());
  return out;
}

MssoProblem complex_sparse_as_msso(const DenseMatrix& f, const DenseVector& d) {
  return to_real_split(MssoProblem(d, {f}));
}

}  // namespace msso
