#pragma once

#include "msso/linalg.hpp"

// Jordan algebra of a single second-order cone {x : x0 >= |x1|}, with the
// bounding entry stored first. Used by the interior-point solver.

namespace msso::soc {

/// x0^2 - |x1|^2.
double det(const Eigen::Ref<const RealVector>& x);
bool interior(const Eigen::Ref<const RealVector>& x);
/// x o y = (x^T y, x0 y1 + y0 x1).
RealVector product(const Eigen::Ref<const RealVector>& x, const Eigen::Ref<const RealVector>& y);
/// Solves x o u = r for u (x interior).
RealVector solve_product(const Eigen::Ref<const RealVector>& x, const Eigen::Ref<const RealVector>& r);
/// Largest a in [0, inf] with x + a dx in the cone (x interior); inf if unbounded.
double max_step(const Eigen::Ref<const RealVector>& x, const Eigen::Ref<const RealVector>& dx);

/// Nesterov-Todd scaling W = eta (2 w w^T - J) for interior x, s: W x = W^{-1} s.
class NtScaling {
 public:
  NtScaling(const Eigen::Ref<const RealVector>& x, const Eigen::Ref<const RealVector>& s);
  RealVector apply(const Eigen::Ref<const RealVector>& v) const;
  RealVector apply_inverse(const Eigen::Ref<const RealVector>& v) const;

 private:
  RealVector w_;
  double eta_ = 1.0;
};

}  // namespace msso::soc
