#include "msso/soc_algebra.hpp"

#include <cmath>
#include <limits>

namespace msso::soc {

double det(const Eigen::Ref<const RealVector>& x) {
  const Index k = x.size() - 1;
  return x(0) * x(0) - x.tail(k).squaredNorm();
}

bool interior(const Eigen::Ref<const RealVector>& x) {
  return x(0) > 0.0 && x(0) > x.tail(x.size() - 1).norm();
}

RealVector product(const Eigen::Ref<const RealVector>& x, const Eigen::Ref<const RealVector>& y) {
  const Index k = x.size() - 1;
  RealVector out(x.size());
  out(0) = x.dot(y);
  out.tail(k) = x(0) * y.tail(k) + y(0) * x.tail(k);
  return out;
}

RealVector solve_product(const Eigen::Ref<const RealVector>& x,
                         const Eigen::Ref<const RealVector>& r) {
  const Index k = x.size() - 1;
  RealVector u(x.size());
  u(0) = (x(0) * r(0) - x.tail(k).dot(r.tail(k))) / det(x);
  u.tail(k) = (r.tail(k) - u(0) * x.tail(k)) / x(0);
  return u;
}

double max_step(const Eigen::Ref<const RealVector>& x, const Eigen::Ref<const RealVector>& dx) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Index k = x.size() - 1;
  const double qa = det(dx);
  const double qb = 2.0 * (x(0) * dx(0) - x.tail(k).dot(dx.tail(k)));
  const double qc = det(x);
  const double scale = dx.squaredNorm();
  if (scale == 0.0) return inf;
  if (std::abs(qa) <= 1e-14 * scale) {
    if (qb < 0.0) return -qc / qb;
    return inf;
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return inf;
  const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
  double best = inf;
  for (double root : {q / qa, q != 0.0 ? qc / q : inf}) {
    if (root > 0.0 && root < best) best = root;
  }
  return best;
}

NtScaling::NtScaling(const Eigen::Ref<const RealVector>& x, const Eigen::Ref<const RealVector>& s) {
  const double dx = det(x);
  const double ds = det(s);
  const RealVector xb = x / std::sqrt(dx);
  const RealVector sb = s / std::sqrt(ds);
  const double gamma = std::sqrt(0.5 * (1.0 + xb.dot(sb)));
  // u = (s + J x) / (2 gamma) is the boost with eta^2 (2 u u^T - J) x = s;
  // w is its half-boost, (2 w w^T - J)^2 = 2 u u^T - J.
  RealVector u = sb;
  u(0) += xb(0);
  u.tail(x.size() - 1) -= xb.tail(x.size() - 1);
  u /= 2.0 * gamma;
  w_ = u;
  w_(0) += 1.0;
  w_ /= std::sqrt(2.0 * (u(0) + 1.0));
  eta_ = std::pow(ds / dx, 0.25);
}

RealVector NtScaling::apply(const Eigen::Ref<const RealVector>& v) const {
  // eta (2 w w^T v - J v)
  RealVector out = (2.0 * w_.dot(v)) * w_;
  out(0) -= v(0);
  out.tail(v.size() - 1) += v.tail(v.size() - 1);
  return eta_ * out;
}

RealVector NtScaling::apply_inverse(const Eigen::Ref<const RealVector>& v) const {
  // (1/eta) (2 J w w^T J v - J v)
  RealVector jw = w_;
  jw.tail(w_.size() - 1) *= -1.0;
  RealVector out = (2.0 * jw.dot(v)) * jw;
  out(0) -= v(0);
  out.tail(v.size() - 1) += v.tail(v.size() - 1);
  return out / eta_;
}

}  // namespace msso::soc
