#pragma once

#include "msso/kernels.hpp"
#include "msso/model.hpp"
#include "msso/report.hpp"

namespace msso {

struct GreedyOptions {
  Exec exec = Exec::serial;
  // A residual with |r| <= zero_tol * |d| counts as zero.
  double zero_tol = 1e-10;
};

/// argmax_n r^H Q_n r with lowest-index ties. Throws "zero residual" for r = 0.
Index mp_select(const ProjectorBank& bank, const DenseVector& r,
                const std::vector<char>& excluded = {}, Exec exec = Exec::serial);

/// Matching pursuit: residual update r_k = r_{k-1} - Q_{q_k} r_{k-1}; repeat picks allowed.
SolveResult run_mp(const MssoProblem& p, Index k, const GreedyOptions& opts = {});
/// Orthogonal matching pursuit: r_k = d - S_k S_k^+ d, distinct picks.
SolveResult run_omp(const MssoProblem& p, Index k, const GreedyOptions& opts = {});
/// Least-squares matching pursuit: picks the block whose joint refit best explains d.
SolveResult run_lsmp(const MssoProblem& p, Index k, const GreedyOptions& opts = {});

/// Final weight computation x = S^+ d on the chosen blocks (same code path as retune).
SolutionG finalize_weights(const MssoProblem& p, const SparsityProfile& profile);

}  // namespace msso
