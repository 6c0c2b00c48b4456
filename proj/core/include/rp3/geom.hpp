#pragma once

#include <vector>

#include "rp3/types.hpp"

namespace rp3 {

// C^2 is identified with R^4 as z = (x1, y1, x2, y2), z0 = x1 + i y1,
// z1 = x2 + i y2, and with the quaternions x1 + y1 i + x2 j + y2 k, so that
// complex multiplication by i is quaternion left multiplication by i.

// Hamiltonian state (v1, v2, u1, u2) -> C^2 point (u1, v1, u2, v2).
// Under this map the Hamiltonian flow of |z|^2/2 is z -> e^{it} z and the
// standard Liouville form becomes (u.dv - v.du)/2.
inline Vec4 to_c2(const Vec4& s) { return {s[2], s[0], s[3], s[1]}; }
inline Vec4 from_c2(const Vec4& z) { return {z[1], z[3], z[0], z[2]}; }
inline Mat4 c2_basis_change() {
  Mat4 p = Mat4::Zero();
  p(0, 2) = p(1, 0) = p(2, 3) = p(3, 1) = 1.0;
  return p;  // to_c2(s) == p * s
}

// Quaternion product in the (1, i, j, k) coordinate order.
Vec4 quat_mul(const Vec4& a, const Vec4& b);

// Multiplication by i on C^2.
inline Vec4 mul_i(const Vec4& z) { return {-z[1], z[0], -z[3], z[2]}; }

// lambda_std at z applied to w.
double liouville_form(const Vec4& z, const Vec4& w);

// d lambda_std(a, b) = <i a, b>.
inline double omega0(const Vec4& a, const Vec4& b) { return mul_i(a).dot(b); }

struct ContactFrame {
  Vec4 z;   // unit base point
  Vec4 e1;  // j z
  Vec4 e2;  // k z
};

inline constexpr double tol_unit = 1e-9;

// Quaternion frame of ker lambda_std on S^3; equivariant under z -> -z.
ContactFrame global_frame(const Vec4& z);

// Splits w = a X + b z + c1 e1 + c2 e2 in the frame at z/|z| and returns
// (c1, c2). z need not be unit: lambda_std is homogeneous, so the kernel at
// z and at z/|z| agree.
Vec2 project_to_contact(const Vec4& z, const Vec4& reeb, const Vec4& w);

// Inverse of the projection restricted to the tangent space of a star-shaped
// level {K = const} at z with gradient g: returns w with g.w = 0 and
// project_to_contact(z, X, w) = c for every Reeb-like X.
Vec4 lift_from_contact(const Vec4& z, const Vec4& gradient, const Vec2& c);

class SampledLoop {
 public:
  enum class Ambient { R3, S3 };

  // Points must be closed (first == last within closure_tol) and have at
  // least 16 samples counting the repeated endpoint.
  static SampledLoop in_r3(std::vector<Vec3> points, double closure_tol = 1e-9);
  static SampledLoop on_s3(std::vector<Vec4> points, double closure_tol = 1e-9);

  Ambient ambient() const { return ambient_; }
  // Distinct vertices; segment i joins vertex i and vertex i+1 mod size().
  std::size_t size() const { return pts_.size(); }
  const Vec4& operator[](std::size_t i) const { return pts_[i]; }

 private:
  SampledLoop(Ambient a, std::vector<Vec4> p) : ambient_(a), pts_(std::move(p)) {}

  Ambient ambient_;
  std::vector<Vec4> pts_;  // R3 loops keep a zero fourth coordinate
};

inline constexpr double tol_link = 1e-6;

struct LinkingResult {
  int value;
  double raw;  // polygon Gauss integral before rounding
};

// Exact polygonal Gauss linking integral; S^3 loops are first mapped to R^3
// by stereographic projection from a pole far from both loops.
LinkingResult linking_integral(const SampledLoop& a, const SampledLoop& b);

inline int linking_number(const SampledLoop& a, const SampledLoop& b) {
  return linking_integral(a, b).value;
}

// Polygonal Gauss integral of two closed polylines in R^3 (no rounding).
double gauss_linking_raw(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Orientation-preserving stereographic projection S^3 minus {pole} -> R^3.
Vec3 stereographic(const Vec4& x, const Vec4& pole);

}  // namespace rp3
