#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace rp3 {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

// Phase-space vectors are ordered positions first, momenta second:
// (x1, x2, y1, y2) with x' = dH/dy, y' = -dH/dx.

// Rotating-frame point (q, p).
struct PhaseState {
  double q1 = 0, q2 = 0, p1 = 0, p2 = 0;

  Vec4 vec() const { return {q1, q2, p1, p2}; }
  static PhaseState from(const Vec4& x) { return {x[0], x[1], x[2], x[3]}; }
};

// Levi-Civita point (v, u); v plays the role of position.
struct RegState {
  double v1 = 0, v2 = 0, u1 = 0, u2 = 0;

  Vec4 vec() const { return {v1, v2, u1, u2}; }
  static RegState from(const Vec4& x) { return {x[0], x[1], x[2], x[3]}; }
};

// Multiplication by i on R^2 = C.
inline Mat2 j2() {
  Mat2 j;
  j << 0, -1, 1, 0;
  return j;
}

// Canonical structure for the (x, y) ordering: z' = J4 grad H.
inline Mat4 j4() {
  Mat4 j = Mat4::Zero();
  j.block<2, 2>(0, 2) = Eigen::Matrix2d::Identity();
  j.block<2, 2>(2, 0) = -Eigen::Matrix2d::Identity();
  return j;
}

inline constexpr double tol_symp = 1e-9;

inline double symplectic_defect(const Mat2& m) {
  return std::abs(m.determinant() - 1.0);
}

inline double symplectic_defect(const Mat4& m) {
  const Mat4 j = j4();
  return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

template <class M>
bool is_symplectic(const M& m, double tol = tol_symp) {
  return symplectic_defect(m) <= tol;
}

}  // namespace rp3
