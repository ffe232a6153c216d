#include "msso/kernels.hpp"

#include <omp.h>

namespace msso {
namespace {

// Orthonormal basis for the columns of `c` whose singular values exceed cutoff.
DenseMatrix basis_above(const DenseMatrix& c, double cutoff) {
  Eigen::BDCSVD<DenseMatrix> svd(c, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff && sv(rank) > 0.0) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

ProjectorBank::ProjectorBank(const ColumnView& view, double rel_tol) {
  bases_.resize(static_cast<std::size_t>(view.N()));
#pragma omp parallel for schedule(dynamic)
  for (Index n = 0; n < view.N(); ++n) {
    bases_[static_cast<std::size_t>(n)] = range_basis(view.block(n), rel_tol);
  }
}

double ProjectorBank::energy(Index n, const DenseVector& r) const {
  const DenseMatrix& u = basis(n);
  if (u.cols() == 0) return 0.0;
  return (u.adjoint() * r).squaredNorm();
}

DenseVector ProjectorBank::project(Index n, const DenseVector& r) const {
  const DenseMatrix& u = basis(n);
  if (u.cols() == 0) return DenseVector::Zero(r.size());
  return u * (u.adjoint() * r);
}

RealVector block_energies(const ProjectorBank& bank, const DenseVector& r,
                          const std::vector<char>& excluded, Exec exec) {
  const Index n_blocks = bank.size();
  RealVector out(n_blocks);
  auto score = [&](Index n) {
    out(n) = (!excluded.empty() && excluded[static_cast<std::size_t>(n)]) ? -1.0
                                                                          : bank.energy(n, r);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (Index n = 0; n < n_blocks; ++n) score(n);
  } else {
    for (Index n = 0; n < n_blocks; ++n) score(n);
  }
  return out;
}

Index argmax_lowest(const RealVector& scores, const std::vector<char>& excluded) {
  Index best = -1;
  double best_value = 0.0;
  for (Index n = 0; n < scores.size(); ++n) {
    if (!excluded.empty() && excluded[static_cast<std::size_t>(n)]) continue;
    if (best < 0 || scores(n) > best_value) {
      best = n;
      best_value = scores(n);
    }
  }
  return best;
}

LsmpScorer::LsmpScorer(const ColumnView& view, const DenseVector& d, double rel_tol)
    : view_(view), d_(d), rel_tol_(rel_tol), residual_(d) {
  reduced_ = view.blocks;
  block_scale_.resize(view.blocks.size());
  for (std::size_t n = 0; n < view.blocks.size(); ++n) {
    block_scale_[n] = view.blocks[n].size() > 0 ? max_singular_value(view.blocks[n]) : 0.0;
  }
}

RealVector LsmpScorer::scores(const std::vector<char>& excluded, Exec exec) const {
  const Index n_blocks = view_.N();
  const double base = d_.squaredNorm() - residual_.squaredNorm();
  RealVector out(n_blocks);
  auto score = [&](Index n) {
    const auto idx = static_cast<std::size_t>(n);
    if (!excluded.empty() && excluded[idx]) {
      out(n) = -1.0;
      return;
    }
    const DenseMatrix u = basis_above(reduced_[idx], rel_tol_ * block_scale_[idx]);
    out(n) = base + (u.cols() > 0 ? (u.adjoint() * residual_).squaredNorm() : 0.0);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Index n = 0; n < n_blocks; ++n) score(n);
  } else {
    for (Index n = 0; n < n_blocks; ++n) score(n);
  }
  return out;
}

void LsmpScorer::accept(Index n, Exec exec) {
  const auto idx = static_cast<std::size_t>(n);
  const DenseMatrix u = basis_above(reduced_[idx], rel_tol_ * block_scale_[idx]);
  if (u.cols() == 0) return;
  // Two projection passes keep the residual orthogonal to the chosen blocks.
  for (int pass = 0; pass < 2; ++pass) residual_ -= u * (u.adjoint() * residual_);
  const Index n_blocks = view_.N();
  auto update = [&](Index m) {
    DenseMatrix& c = reduced_[static_cast<std::size_t>(m)];
    for (int pass = 0; pass < 2; ++pass) c -= u * (u.adjoint() * c);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (Index m = 0; m < n_blocks; ++m) update(m);
  } else {
    for (Index m = 0; m < n_blocks; ++m) update(m);
  }
}

}  // namespace msso
