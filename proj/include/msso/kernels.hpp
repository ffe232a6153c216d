#pragma once

#include <vector>

#include "msso/model.hpp"

// Data-parallel kernels behind the greedy solvers. Each kernel has a serial and
// an OpenMP path computing the same per-candidate values; the argmax reduction is
// always serial and picks the lowest index among equal scores, so both paths
// select identically.

namespace msso {

enum class Exec { serial, parallel };

/// Factored projectors Q_n = U_n U_n^H with U_n an orthonormal basis of range(C_n).
class ProjectorBank {
 public:
  explicit ProjectorBank(const ColumnView& view, double rel_tol = kDefaultPinvTol);

  Index size() const { return static_cast<Index>(bases_.size()); }
  const DenseMatrix& basis(Index n) const { return bases_[static_cast<std::size_t>(n)]; }

  /// r^H Q_n r.
  double energy(Index n, const DenseVector& r) const;
  /// Q_n r.
  DenseVector project(Index n, const DenseVector& r) const;

 private:
  std::vector<DenseMatrix> bases_;
};

/// r^H Q_n r for every n; entries flagged in `excluded` are set to -1.
RealVector block_energies(const ProjectorBank& bank, const DenseVector& r,
                          const std::vector<char>& excluded, Exec exec);

/// Lowest index attaining the maximum among non-excluded entries; -1 if none.
Index argmax_lowest(const RealVector& scores, const std::vector<char>& excluded);

/// Incremental scorer for least-squares matching pursuit. Keeps an orthonormal
/// basis B of the chosen blocks and, per candidate, C_n with range(B) projected out.
class LsmpScorer {
 public:
  LsmpScorer(const ColumnView& view, const DenseVector& d, double rel_tol = 1e-10);

  /// d^H Q^(n) d for every candidate n, Q^(n) the projector onto range([S, C_n]).
  /// Excluded entries are -1.
  RealVector scores(const std::vector<char>& excluded, Exec exec) const;
  /// Appends block n to the chosen set.
  void accept(Index n, Exec exec);
  /// d - S S^+ d for the current chosen set.
  const DenseVector& residual() const { return residual_; }

 private:
  const ColumnView& view_;
  DenseVector d_;
  double rel_tol_;
  std::vector<DenseMatrix> reduced_;  // C_n - B B^H C_n
  std::vector<double> block_scale_;   // sigma_max(C_n)
  DenseVector residual_;
};

}  // namespace msso
