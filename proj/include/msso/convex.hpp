#pragma once

#include <functional>

#include "msso/model.hpp"
#include "msso/report.hpp"

namespace msso {

enum class IrlsInit { pseudoinverse, ones };

struct IrlsOptions {
  IrlsInit init = IrlsInit::pseudoinverse;
  LsqrOptions lsqr{};
  int line_search_evals = 40;
};

/// Diagonal of W_tot in h_tot order: entry n*P + p is 2 / (|h_n| + epsilon).
RealVector irls_weights(const SolutionG& g, double epsilon);

/// Golden-section search for mu in [0, 1]. The returned point never scores
/// worse than either endpoint.
double line_search_mu(const std::function<double(double)>& f, double tol = 1e-10,
                      int max_evals = 40);

/// Iteratively reweighted least squares on 0.5 |d - C_tot h_tot|^2 + lambda sum |h_n|.
/// Each step solves a Tikhonov problem with LSQR and line-searches toward it.
SolveResult irls(const MssoProblem& p, const RelaxParams& params, const IrlsOptions& opts = {});

/// Row-by-row shrinkage. Real-valued problems only.
SolveResult rbrs(const MssoProblem& p, const RelaxParams& params);

/// Column-by-column shrinkage. Real-valued problems only.
SolveResult cbcs(const MssoProblem& p, const RelaxParams& params);

/// Proximal constant for CBCS: max(s, s^2) with s the largest sigma_max(F_p),
/// so that alpha I - F_p^T F_p is positive semidefinite.
double cbcs_alpha(const MssoProblem& p);

/// Minimizes v x + alpha/2 x^2 + lambda sqrt(x^2 + b) starting from x_start with
/// the fixed point x <- -v / (alpha + lambda / sqrt(x^2 + b + eps)).
double cbcs_element_solve(double v, double b, double alpha, double lambda, double eps,
                          Index max_iter, double delta, double x_start);

/// Minimizes 0.5 |r - C x|^2 + lambda |x| over x with the fixed point
/// x <- (C^T C + lambda / (|x| + eps) I)^{-1} C^T r, starting from x_start.
RealVector rbrs_row_solve(const RealMatrix& c, const RealMatrix& gram, const RealVector& r,
                          double lambda, double eps, Index max_iter, double delta,
                          const RealVector& x_start, Index* iterations = nullptr);

/// Initial point shared by the relaxation solvers: params.initial or C_tot^+ d.
SolutionG relax_initial_point(const MssoProblem& p, const RelaxParams& params);

}  // namespace msso
