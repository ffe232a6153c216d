#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace msso {

using Index = Eigen::Index;
using Complex = std::complex<double>;

// Complex dense storage. A real matrix is a DenseMatrix with zero imaginary parts.
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Error raised for contract violations (bad shapes, empty operands, bad input files).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kDefaultPinvTol = 1e-12;

/// Moore-Penrose pseudoinverse through a thin SVD. Singular values below
/// rel_tol * sigma_max are treated as zero.
DenseMatrix pinv(const DenseMatrix& a, double rel_tol = kDefaultPinvTol);
RealMatrix pinv(const RealMatrix& a, double rel_tol = kDefaultPinvTol);

/// Minimum-norm least-squares solution pinv(a) * b without forming pinv(a).
DenseVector lstsq_min_norm(const DenseMatrix& a, const DenseVector& b,
                           double rel_tol = kDefaultPinvTol);
RealVector lstsq_min_norm(const RealMatrix& a, const RealVector& b,
                          double rel_tol = kDefaultPinvTol);

/// Orthonormal basis of range(a) (columns), rank decided with the pinv rule.
DenseMatrix range_basis(const DenseMatrix& a, double rel_tol = kDefaultPinvTol);

struct LsqrOptions {
  double tol = 1e-10;
  // <= 0 selects 4 * max(rows, cols).
  Index max_iter = 0;
};

struct LsqrResult {
  DenseVector x;
  Index iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;  // sqrt(|d - A x|^2 + lambda |x|^2)
};

/// Solves min |d - A q|^2 + lambda |q|^2 with Golub-Kahan bidiagonalization
/// (LSQR). `lambda` is the Tikhonov weight; LSQR's damping is sqrt(lambda).
LsqrResult lsqr_damped(const DenseMatrix& a, const DenseVector& d, double lambda,
                       const LsqrOptions& opts = {});

double max_singular_value(const DenseMatrix& a);
double max_singular_value(const RealMatrix& a);

bool is_real(const DenseMatrix& a);
bool all_finite(const DenseMatrix& a);

}  // namespace msso
