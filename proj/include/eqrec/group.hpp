#pragma once

#include "eqrec/types.hpp"

namespace eqrec {

// The cyclic group Z_m of planar rotations by multiples of 2*pi/m.
struct CyclicGroup {
  int m = 1;

  explicit CyclicGroup(int order) : m(order) {
    if (order < 1) throw std::invalid_argument("CyclicGroup: order must be >= 1");
  }

  int compose(int k1, int k2) const { return ((k1 + k2) % m + m) % m; }
  int inverse(int k) const { return (m - (k % m)) % m; }

  double angle(int k) const { return 2.0 * M_PI * double(k) / double(m); }

  // 2x2 rotation matrix of element k (counterclockwise in the x-right,
  // y-up plane convention).
  Matrix2 rotation(int k) const {
    const double a = angle(k);
    const Scalar c = snap_unit(std::cos(a)), s = snap_unit(std::sin(a));
    Matrix2 r;
    r << c, -s, s, c;
    return r;
  }

  // True when element k rotates the pixel grid onto itself exactly.
  bool on_grid(int k) const { return (4 * (((k % m) + m) % m)) % m == 0; }

  bool operator==(const CyclicGroup& o) const { return m == o.m; }
};

// Element (t, R_k) of the semi-direct product R^2 x| Z_m, t in pixels.
struct PlanarIsometry {
  Vector2 t = Vector2::Zero();
  int k = 0;
  CyclicGroup group{1};

  PlanarIsometry(Vector2 translation, int rot_index, CyclicGroup g)
      : t(std::move(translation)), k(((rot_index % g.m) + g.m) % g.m), group(g) {}

  static PlanarIsometry identity(CyclicGroup g) { return {Vector2::Zero(), 0, g}; }

  Matrix2 rotation() const { return group.rotation(k); }

  // Homogeneous-coordinate 3x3 matrix [[R, t], [0, 1]].
  Eigen::Matrix3d homogeneous() const {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    h.topLeftCorner<2, 2>() = rotation();
    h.topRightCorner<2, 1>() = t;
    return h;
  }

  PlanarIsometry inverse() const {
    const Matrix2 rinv = group.rotation(group.inverse(k));
    return {Vector2(-(rinv * t)), group.inverse(k), group};
  }

  Vector2 act(const Vector2& x) const { return rotation() * x + t; }
};

// Product law (t1, R1)(t2, R2) = (t1 + R1 t2, R1 R2).
inline PlanarIsometry group_compose(const PlanarIsometry& g1, const PlanarIsometry& g2) {
  if (!(g1.group == g2.group))
    throw std::invalid_argument("group_compose: mismatched group orders");
  return {Vector2(g1.t + g1.rotation() * g2.t), g1.group.compose(g1.k, g2.k), g1.group};
}

}  // namespace eqrec
