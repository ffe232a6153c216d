#pragma once

#include <optional>
#include <vector>

#include "msso/linalg.hpp"

namespace msso {

/// One observation d (length M) explained by P system matrices F_p (each M x N):
/// d = F_1 g_1 + ... + F_P g_P.
class MssoProblem {
 public:
  MssoProblem(DenseVector d, std::vector<DenseMatrix> systems);

  Index M() const { return d_.size(); }
  Index N() const { return systems_.front().cols(); }
  Index P() const { return static_cast<Index>(systems_.size()); }

  const DenseVector& observation() const { return d_; }
  const std::vector<DenseMatrix>& systems() const { return systems_; }
  const DenseMatrix& system(Index p) const { return systems_[static_cast<std::size_t>(p)]; }

  bool is_real() const;

  /// F_tot = [F_1 ... F_P], acting on g_tot = [g_1; ...; g_P].
  DenseMatrix row_stacked() const;
  /// C_tot = [C_1 ... C_N], acting on h_tot = [h_1; ...; h_N].
  DenseMatrix column_stacked() const;

 private:
  DenseVector d_;
  std::vector<DenseMatrix> systems_;
};

/// Block n is C_n = [f_{1,n} ... f_{P,n}] (M x P).
struct ColumnView {
  std::vector<DenseMatrix> blocks;

  Index N() const { return static_cast<Index>(blocks.size()); }
  const DenseMatrix& block(Index n) const { return blocks[static_cast<std::size_t>(n)]; }
};

/// N x P unknown matrix: column p is g_p, row n is h_n^T.
using SolutionG = DenseMatrix;

/// Strictly increasing, duplicate-free set of row indices. Stored 0-based;
/// reports print them 1-based.
class SparsityProfile {
 public:
  SparsityProfile() = default;
  /// Sorts and deduplicates.
  explicit SparsityProfile(std::vector<Index> indices);

  const std::vector<Index>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(Index n) const;
  /// Throws if any index is outside [0, n_rows).
  void check_range(Index n_rows) const;

  friend bool operator==(const SparsityProfile&, const SparsityProfile&) = default;

 private:
  std::vector<Index> indices_;
};

struct RelaxParams {
  double lambda = 0.0;
  // <= 0 selects 1e-8 * (1 + |d|).
  double epsilon = 0.0;
  double delta_outer = 1e-5;
  double delta_inner = 1e-5;
  Index max_outer = 500;
  Index max_inner = 100;
  // Optional starting point; otherwise the pseudoinverse solution.
  std::optional<SolutionG> initial;
};

double resolve_epsilon(const RelaxParams& params, const MssoProblem& p);

ColumnView column_view(const MssoProblem& p);
/// Inverse permutation of column_view: rebuilds the problem from (d, blocks).
MssoProblem from_column_view(const DenseVector& d, const ColumnView& view);

/// l1 norm of the l2 norms of the rows of G.
double s_norm(const SolutionG& g);
RealVector row_norms(const SolutionG& g);

/// d - sum_p F_p g_p.
DenseVector residual(const MssoProblem& p, const SolutionG& g);
/// 0.5 |d - F_tot g_tot|^2 + lambda |G|_S, evaluated in the row view.
double objective(const MssoProblem& p, const SolutionG& g, double lambda);
/// Same value computed through the column view: 0.5 |d - sum_n C_n h_n|^2 + lambda sum_n |h_n|.
double objective_column_view(const ColumnView& view, const DenseVector& d, const SolutionG& g,
                             double lambda);

/// h_tot = [h_1; ...; h_N] <-> G.
DenseVector stack_rows(const SolutionG& g);
SolutionG unstack_rows(const DenseVector& h_tot, Index n, Index p);
/// g_tot = [g_1; ...; g_P] <-> G.
DenseVector stack_columns(const SolutionG& g);
SolutionG unstack_columns(const DenseVector& g_tot, Index n, Index p);

/// Indices of the K largest-l2 rows; exactly-zero rows are never included and
/// ties go to the lowest index.
SparsityProfile profile_of(const SolutionG& g, Index k);

double recovery_fraction(const SparsityProfile& truth, const SparsityProfile& estimate);

/// Zeroes rows outside the profile and refits the rest by minimum-norm least
/// squares against d using [C_{q1} ... C_{qK}].
SolutionG retune(const MssoProblem& p, const SparsityProfile& profile);
SolutionG retune(const MssoProblem& p, const ColumnView& view, const SparsityProfile& profile);

/// [C_{q1} ... C_{qK}] for the given ordered indices.
DenseMatrix stack_blocks(const ColumnView& view, const std::vector<Index>& order);

// Complex -> real reductions.

/// Row-stacked reduction: d~ = [Re d; Im d], C~_n = [[Re C_n, -Im C_n]; [Im C_n, Re C_n]].
/// Systems 0..P-1 are [Re F_p; Im F_p], systems P..2P-1 are [-Im F_p; Re F_p].
MssoProblem to_real_stacked(const MssoProblem& p);
SolutionG to_real_stacked_solution(const SolutionG& g);
SolutionG from_real_stacked_solution(const SolutionG& g_real);

/// Column-split reduction: 2P real systems ordered (F_1^A, F_1^B, ..., F_P^A, F_P^B)
/// with F^A = [Re F; Im F] and F^B = [-Im F; Re F].
MssoProblem to_real_split(const MssoProblem& p);
SolutionG to_real_split_solution(const SolutionG& g);
SolutionG from_real_split_solution(const SolutionG& g_real);

/// One complex system as a real MSSO problem with two unknown vectors (Re g, Im g).
MssoProblem complex_sparse_as_msso(const DenseMatrix& f, const DenseVector& d);

}  // namespace msso
