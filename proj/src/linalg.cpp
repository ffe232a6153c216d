#include "msso/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msso {
namespace {

template <typename Matrix>
void require_nonempty(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw Error("empty operand");
}

void require_tol(double rel_tol) {
  if (!(rel_tol >= 0.0 && rel_tol < 1.0)) throw Error("pinv: rel_tol must lie in [0, 1)");
}

template <typename Matrix>
Matrix pinv_impl(const Matrix& a, double rel_tol) {
  require_nonempty(a);
  require_tol(rel_tol);
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * (sv.size() > 0 ? sv(0) : 0.0);
  Matrix vs = svd.matrixV();
  for (Index k = 0; k < sv.size(); ++k) {
    const double s = sv(k);
    if (s > cutoff && s > 0.0) {
      vs.col(k) /= s;
    } else {
      vs.col(k).setZero();
    }
  }
  return vs * svd.matrixU().adjoint();
}

template <typename Matrix, typename Vector>
Vector lstsq_impl(const Matrix& a, const Vector& b, double rel_tol) {
  require_nonempty(a);
  require_tol(rel_tol);
  if (a.rows() != b.size()) throw Error("lstsq: dimension mismatch");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * (sv.size() > 0 ? sv(0) : 0.0);
  Vector coeff = svd.matrixU().adjoint() * b;
  for (Index k = 0; k < sv.size(); ++k) {
    const double s = sv(k);
    coeff(k) = (s > cutoff && s > 0.0) ? coeff(k) / s : typename Vector::Scalar(0);
  }
  return svd.matrixV() * coeff;
}

// Stable Givens rotation: returns (c, s, r) with [c s; -s c] [a; b] = [r; 0].
struct Rotation {
  double c, s, r;
};

Rotation sym_ortho(double a, double b) {
  if (b == 0.0) return {a >= 0.0 ? 1.0 : -1.0, 0.0, std::abs(a)};
  if (a == 0.0) return {0.0, b >= 0.0 ? 1.0 : -1.0, std::abs(b)};
  if (std::abs(b) > std::abs(a)) {
    const double tau = a / b;
    const double s = (b >= 0.0 ? 1.0 : -1.0) / std::sqrt(1.0 + tau * tau);
    const double c = s * tau;
    return {c, s, b / s};
  }
  const double tau = b / a;
  const double c = (a >= 0.0 ? 1.0 : -1.0) / std::sqrt(1.0 + tau * tau);
  const double s = c * tau;
  return {c, s, a / c};
}

}  // namespace

DenseMatrix pinv(const DenseMatrix& a, double rel_tol) { return pinv_impl(a, rel_tol); }
RealMatrix pinv(const RealMatrix& a, double rel_tol) { return pinv_impl(a, rel_tol); }

DenseVector lstsq_min_norm(const DenseMatrix& a, const DenseVector& b, double rel_tol) {
  return lstsq_impl(a, b, rel_tol);
}

RealVector lstsq_min_norm(const RealMatrix& a, const RealVector& b, double rel_tol) {
  return lstsq_impl(a, b, rel_tol);
}

DenseMatrix range_basis(const DenseMatrix& a, double rel_tol) {
  require_nonempty(a);
  Eigen::BDCSVD<DenseMatrix> svd(a, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * (sv.size() > 0 ? sv(0) : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff && sv(rank) > 0.0) ++rank;
  return svd.matrixU().leftCols(rank);
}

LsqrResult lsqr_damped(const DenseMatrix& a, const DenseVector& d, double lambda,
                       const LsqrOptions& opts) {
  if (a.rows() != d.size()) throw Error("lsqr_damped: dimension mismatch");
  if (!(lambda >= 0.0)) throw Error("lsqr_damped: lambda must be nonnegative");
  const Index n = a.cols();
  const Index iter_lim = opts.max_iter > 0 ? opts.max_iter : 4 * std::max(a.rows(), n);
  const double atol = opts.tol;
  const double btol = opts.tol;
  const double eps = std::numeric_limits<double>::epsilon();
  const double damp = std::sqrt(lambda);
  const double dampsq = lambda;

  LsqrResult out;
  out.x = DenseVector::Zero(n);

  DenseVector u = d;
  const double bnorm = u.norm();
  double beta = bnorm;
  DenseVector v(n);
  double alfa = 0.0;
  if (beta > 0.0) {
    u /= beta;
    v.noalias() = a.adjoint() * u;
    alfa = v.norm();
  } else {
    out.converged = true;
    return out;
  }
  if (alfa > 0.0) {
    v /= alfa;
  } else {
    // d is orthogonal to range(A): q = 0 is optimal.
    out.converged = true;
    out.residual_norm = bnorm;
    return out;
  }
  DenseVector w = v;

  double anorm = 0.0, ddnorm = 0.0, res2 = 0.0, xxnorm = 0.0, z = 0.0;
  double cs2 = -1.0, sn2 = 0.0;
  double rhobar = alfa, phibar = beta, rnorm = beta;

  Index itn = 0;
  while (itn < iter_lim) {
    ++itn;
    u = a * v - alfa * u;
    beta = u.norm();
    if (beta > 0.0) {
      u /= beta;
      anorm = std::sqrt(anorm * anorm + alfa * alfa + beta * beta + dampsq);
      v = a.adjoint() * u - beta * v;
      alfa = v.norm();
      if (alfa > 0.0) v /= alfa;
    }

    double rhobar1 = rhobar, psi = 0.0;
    if (damp > 0.0) {
      rhobar1 = std::sqrt(rhobar * rhobar + dampsq);
      const double cs1 = rhobar / rhobar1;
      const double sn1 = damp / rhobar1;
      psi = sn1 * phibar;
      phibar = cs1 * phibar;
    }

    const Rotation rot = sym_ortho(rhobar1, beta);
    const double rho = rot.r;
    const double theta = rot.s * alfa;
    rhobar = -rot.c * alfa;
    const double phi = rot.c * phibar;
    phibar = rot.s * phibar;
    const double tau = rot.s * phi;

    const double t1 = phi / rho;
    const double t2 = -theta / rho;
    ddnorm += w.squaredNorm() / (rho * rho);
    out.x += t1 * w;
    w = v + t2 * w;

    const double delta = sn2 * rho;
    const double gambar = -cs2 * rho;
    const double rhs = phi - delta * z;
    const double zbar = rhs / gambar;
    const double xnorm = std::sqrt(xxnorm + zbar * zbar);
    const double gamma = std::sqrt(gambar * gambar + theta * theta);
    cs2 = gambar / gamma;
    sn2 = theta / gamma;
    z = rhs / gamma;
    xxnorm += z * z;

    const double acond = anorm * std::sqrt(ddnorm);
    res2 += psi * psi;
    rnorm = std::sqrt(phibar * phibar + res2);
    const double arnorm = alfa * std::abs(tau);

    const double test1 = rnorm / bnorm;
    const double test2 = arnorm / (anorm * rnorm + eps);
    const double test3 = 1.0 / (acond + eps);
    const double t1n = test1 / (1.0 + anorm * xnorm / bnorm);
    const double rtol = btol + atol * anorm * xnorm / bnorm;

    if (1.0 + test3 <= 1.0 || 1.0 + test2 <= 1.0 || 1.0 + t1n <= 1.0 || test2 <= atol ||
        test1 <= rtol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = itn;
  out.residual_norm = rnorm;
  return out;
}

double max_singular_value(const DenseMatrix& a) {
  require_nonempty(a);
  Eigen::BDCSVD<DenseMatrix> svd(a);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

double max_singular_value(const RealMatrix& a) {
  require_nonempty(a);
  Eigen::BDCSVD<RealMatrix> svd(a);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

bool is_real(const DenseMatrix& a) { return (a.imag().array() == 0.0).all(); }

bool all_finite(const DenseMatrix& a) { return a.allFinite(); }

}  // namespace msso
