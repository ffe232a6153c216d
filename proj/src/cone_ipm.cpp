#include <cmath>
#include <limits>

#include "msso/cone.hpp"
#include "msso/soc_algebra.hpp"

namespace msso {
namespace {

// The solver works on a permuted copy of the variables in which every
// second-order block stores its bounding entry first.
struct Block {
  ConeKind kind;
  Index offset;
  Index size;
};

class InteriorPoint {
 public:
  InteriorPoint(const ConeProgram& prog, const InteriorPointOptions& opts);
  ConeSolveOutcome run();

 private:
  struct Direction {
    RealVector dx, dy, ds, w_dx, winv_ds;
  };

  void scale();
  RealVector apply_w(const RealVector& v) const;
  RealVector apply_w_inverse(const RealVector& v) const;
  RealVector jordan(const RealVector& a, const RealVector& b) const;
  RealVector jordan_solve(const RealVector& a, const RealVector& r) const;
  RealVector identity() const;
  double max_step(const RealVector& x, const RealVector& dx) const;
  void shift_into_cone(RealVector& v) const;
  bool factor();
  Direction newton(const RealVector& r_p, const RealVector& r_d, const RealVector& r_c) const;
  RealVector to_program(const RealVector& v) const;

  InteriorPointOptions opts_;
  std::vector<Index> order_;
  std::vector<Block> blocks_;
  RealMatrix a_;
  RealVector b_, c_;
  Index degree_ = 0;

  RealVector x_, y_, s_;
  RealVector lambda_;
  RealVector orthant_scale_;  // sqrt(s / x) on orthant entries
  std::vector<soc::NtScaling> nt_;
  std::vector<Index> nt_index_;
  RealMatrix y_mat_;
  Eigen::LLT<RealMatrix> llt_;
  Eigen::LDLT<RealMatrix> ldlt_;
  bool use_ldlt_ = false;
};

InteriorPoint::InteriorPoint(const ConeProgram& prog, const InteriorPointOptions& opts)
    : opts_(opts) {
  const Index n = prog.n_vars();
  order_.reserve(static_cast<std::size_t>(n));
  for (const ConeBlock& cone : prog.cones) {
    const Index start = static_cast<Index>(order_.size());
    if (cone.kind == ConeKind::orthant) {
      for (Index i = 0; i < cone.size; ++i) order_.push_back(cone.offset + i);
      degree_ += cone.size;
    } else {
      order_.push_back(cone.offset + cone.size - 1);
      for (Index i = 0; i + 1 < cone.size; ++i) order_.push_back(cone.offset + i);
      degree_ += 1;
    }
    blocks_.push_back({cone.kind, start, cone.size});
  }
  if (static_cast<Index>(order_.size()) != n) throw Error("cone blocks do not cover the variables");
  a_.resize(prog.n_eq(), n);
  c_.resize(n);
  for (Index i = 0; i < n; ++i) {
    a_.col(i) = prog.eq_matrix.col(order_[static_cast<std::size_t>(i)]);
    c_(i) = prog.objective(order_[static_cast<std::size_t>(i)]);
  }
  b_ = prog.eq_rhs;
  nt_index_.assign(blocks_.size(), -1);
}

RealVector InteriorPoint::identity() const {
  RealVector e = RealVector::Zero(c_.size());
  for (const Block& blk : blocks_) {
    if (blk.kind == ConeKind::orthant) {
      e.segment(blk.offset, blk.size).setOnes();
    } else {
      e(blk.offset) = 1.0;
    }
  }
  return e;
}

RealVector InteriorPoint::jordan(const RealVector& a, const RealVector& b) const {
  RealVector out(a.size());
  for (const Block& blk : blocks_) {
    if (blk.kind == ConeKind::orthant) {
      out.segment(blk.offset, blk.size) =
          a.segment(blk.offset, blk.size).cwiseProduct(b.segment(blk.offset, blk.size));
    } else {
      out.segment(blk.offset, blk.size) =
          soc::product(a.segment(blk.offset, blk.size), b.segment(blk.offset, blk.size));
    }
  }
  return out;
}

RealVector InteriorPoint::jordan_solve(const RealVector& a, const RealVector& r) const {
  RealVector out(a.size());
  for (const Block& blk : blocks_) {
    if (blk.kind == ConeKind::orthant) {
      out.segment(blk.offset, blk.size) =
          r.segment(blk.offset, blk.size).cwiseQuotient(a.segment(blk.offset, blk.size));
    } else {
      out.segment(blk.offset, blk.size) =
          soc::solve_product(a.segment(blk.offset, blk.size), r.segment(blk.offset, blk.size));
    }
  }
  return out;
}

double InteriorPoint::max_step(const RealVector& x, const RealVector& dx) const {
  double step = std::numeric_limits<double>::infinity();
  for (const Block& blk : blocks_) {
    if (blk.kind == ConeKind::orthant) {
      for (Index i = blk.offset; i < blk.offset + blk.size; ++i) {
        if (dx(i) < 0.0) step = std::min(step, -x(i) / dx(i));
      }
    } else {
      step = std::min(step, soc::max_step(x.segment(blk.offset, blk.size),
                                          dx.segment(blk.offset, blk.size)));
    }
  }
  return step;
}

void InteriorPoint::shift_into_cone(RealVector& v) const {
  // Smallest a with v + a e in the cone; shift by 1 + a when a >= 0.
  double a = -std::numeric_limits<double>::infinity();
  for (const Block& blk : blocks_) {
    if (blk.kind == ConeKind::orthant) {
      a = std::max(a, -v.segment(blk.offset, blk.size).minCoeff());
    } else {
      a = std::max(a, v.segment(blk.offset + 1, blk.size - 1).norm() - v(blk.offset));
    }
  }
  if (a >= 0.0) v += (1.0 + a) * identity();
}

void InteriorPoint::scale() {
  nt_.clear();
  orthant_scale_ = RealVector::Zero(x_.size());
  lambda_.resize(x_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& blk = blocks_[k];
    if (blk.kind == ConeKind::orthant) {
      const auto xs = x_.segment(blk.offset, blk.size);
      const auto ss = s_.segment(blk.offset, blk.size);
      orthant_scale_.segment(blk.offset, blk.size) = ss.cwiseQuotient(xs).cwiseSqrt();
      lambda_.segment(blk.offset, blk.size) = xs.cwiseProduct(ss).cwiseSqrt();
    } else {
      nt_index_[k] = static_cast<Index>(nt_.size());
      nt_.emplace_back(x_.segment(blk.offset, blk.size), s_.segment(blk.offset, blk.size));
      lambda_.segment(blk.offset, blk.size) = nt_.back().apply(x_.segment(blk.offset, blk.size));
    }
  }
}

RealVector InteriorPoint::apply_w(const RealVector& v) const {
  RealVector out(v.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& blk = blocks_[k];
    if (blk.kind == ConeKind::orthant) {
      out.segment(blk.offset, blk.size) = orthant_scale_.segment(blk.offset, blk.size).cwiseProduct(
          v.segment(blk.offset, blk.size));
    } else {
      out.segment(blk.offset, blk.size) =
          nt_[static_cast<std::size_t>(nt_index_[k])].apply(v.segment(blk.offset, blk.size));
    }
  }
  return out;
}

RealVector InteriorPoint::apply_w_inverse(const RealVector& v) const {
  RealVector out(v.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Block& blk = blocks_[k];
    if (blk.kind == ConeKind::orthant) {
      out.segment(blk.offset, blk.size) = v.segment(blk.offset, blk.size).cwiseQuotient(
          orthant_scale_.segment(blk.offset, blk.size));
    } else {
      out.segment(blk.offset, blk.size) =
          nt_[static_cast<std::size_t>(nt_index_[k])].apply_inverse(v.segment(blk.offset, blk.size));
    }
  }
  return out;
}

bool InteriorPoint::factor() {
  // Y = A W^{-1}, rows of A mapped through the symmetric W^{-1}.
  y_mat_.resize(a_.rows(), a_.cols());
  for (Index i = 0; i < a_.rows(); ++i) {
    y_mat_.row(i) = apply_w_inverse(a_.row(i).transpose()).transpose();
  }
  RealMatrix normal = RealMatrix::Zero(a_.rows(), a_.rows());
  normal.selfadjointView<Eigen::Lower>().rankUpdate(y_mat_);
  normal = normal.selfadjointView<Eigen::Lower>();
  llt_.compute(normal);
  use_ldlt_ = llt_.info() != Eigen::Success;
  if (use_ldlt_) {
    const double reg = 1e-13 * std::max(1.0, normal.diagonal().maxCoeff());
    normal.diagonal().array() += reg;
    ldlt_.compute(normal);
    return ldlt_.info() == Eigen::Success;
  }
  return true;
}

InteriorPoint::Direction InteriorPoint::newton(const RealVector& r_p, const RealVector& r_d,
                                               const RealVector& r_c) const {
  Direction dir;
  const RealVector xi = jordan_solve(lambda_, r_c);
  const RealVector t = xi - apply_w_inverse(r_d);
  const RealVector rhs = r_p - y_mat_ * t;
  dir.dy = use_ldlt_ ? RealVector(ldlt_.solve(rhs)) : RealVector(llt_.solve(rhs));
  dir.w_dx = y_mat_.transpose() * dir.dy + t;
  dir.dx = apply_w_inverse(dir.w_dx);
  dir.winv_ds = xi - dir.w_dx;
  dir.ds = apply_w(dir.winv_ds);
  return dir;
}

RealVector InteriorPoint::to_program(const RealVector& v) const {
  RealVector out(v.size());
  for (std::size_t i = 0; i < order_.size(); ++i) out(order_[i]) = v(static_cast<Index>(i));
  return out;
}

ConeSolveOutcome InteriorPoint::run() {
  ConeSolveOutcome out;
  const double b_scale = std::max(1.0, b_.norm());
  const double c_scale = std::max(1.0, c_.norm());

  // Least-norm starting points shifted into the cone interior.
  Eigen::LDLT<RealMatrix> aat((a_ * a_.transpose()).eval());
  x_ = a_.transpose() * aat.solve(b_);
  y_ = aat.solve(a_ * c_);
  s_ = c_ - a_.transpose() * y_;
  shift_into_cone(x_);
  shift_into_cone(s_);
  const RealVector e = identity();

  out.status = "max_iterations";
  for (Index it = 0; it <= opts_.max_iter; ++it) {
    const RealVector r_p = b_ - a_ * x_;
    const RealVector r_d = c_ - a_.transpose() * y_ - s_;
    const double gap = x_.dot(s_);
    const double pobj = c_.dot(x_);
    out.primal_residual = r_p.norm() / b_scale;
    out.dual_residual = r_d.norm() / c_scale;
    out.gap = gap / std::max(1.0, std::abs(pobj));
    out.iterations = it;
    if (!std::isfinite(out.primal_residual) || !std::isfinite(out.dual_residual) ||
        !std::isfinite(out.gap)) {
      out.status = "numerical_error";
      break;
    }
    if (out.primal_residual <= opts_.tol && out.dual_residual <= opts_.tol && out.gap <= opts_.tol) {
      out.status = "optimal";
      break;
    }
    if (it == opts_.max_iter) break;

    const double mu = gap / static_cast<double>(degree_);
    scale();
    if (!factor()) {
      out.status = "numerical_error";
      break;
    }
    const Direction aff = newton(r_p, r_d, -jordan(lambda_, lambda_));
    const double a_aff = std::min(1.0, std::min(max_step(x_, aff.dx), max_step(s_, aff.ds)));
    const double mu_aff =
        (x_ + a_aff * aff.dx).dot(s_ + a_aff * aff.ds) / static_cast<double>(degree_);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
    const RealVector r_c =
        sigma * mu * e - jordan(lambda_, lambda_) - jordan(aff.w_dx, aff.winv_ds);
    const Direction dir = newton(r_p, r_d, r_c);
    const double step =
        std::min(1.0, 0.99 * std::min(max_step(x_, dir.dx), max_step(s_, dir.ds)));
    x_ += step * dir.dx;
    y_ += step * dir.dy;
    s_ += step * dir.ds;
  }
  const double loose = 1e4 * opts_.tol;
  out.ok = out.status == "optimal" ||
           (out.primal_residual <= loose && out.dual_residual <= loose && out.gap <= loose);
  if (out.ok && out.status != "optimal") out.status = "optimal_inaccurate";
  out.x = to_program(x_);
  return out;
}

}  // namespace

ConeSolveOutcome NativeConeSolver::solve(const ConeProgram& prog) const {
  InteriorPoint ipm(prog, opts_);
  return ipm.run();
}

}  // namespace msso
