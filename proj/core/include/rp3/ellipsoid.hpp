#pragma once

#include <cstddef>

#include "rp3/hamiltonian.hpp"
#include "rp3/index.hpp"
#include "rp3/orbit.hpp"
#include "rp3/types.hpp"

namespace rp3 {

// Ellipsoid {|z0|^2 / r1^2 + |z1|^2 / r2^2 = 1} in C^2 with 0 < r1 < r2.
struct EllipsoidParams {
  double r1 = 1.0;
  double r2 = 1.5;

  void validate() const;
  double ratio() const { return (r1 * r1) / (r2 * r2); }
  // r2^2 / r1^2 within 1e-9 of a rational with denominator <= 50.
  bool near_rational() const;
};

// True if x is within tol of p/q for some q <= max_den.
bool near_rational(double x, int max_den = 50, double tol = 1e-9);

// K_E - 1 in the state ordering: (v1^2 + u1^2) / r1^2 + (v2^2 + u2^2) / r2^2 - 1.
// Read through to_c2, its flow on {K_E = 0} is the closed-form rotation below.
class EllipsoidHamiltonian final : public Hamiltonian {
 public:
  explicit EllipsoidHamiltonian(const EllipsoidParams& p);
  double value(const Vec4& x) const override;
  Vec4 gradient(const Vec4& x) const override;
  Mat4 hessian(const Vec4& x) const override;
  const EllipsoidParams& params() const { return p_; }

 private:
  EllipsoidParams p_;
  Vec4 w_;  // diagonal of the Hessian
};

// (z0, z1) -> (e^{2it/r1^2} z0, e^{2it/r2^2} z1) for z in C^2 on the ellipsoid
// (checked to 1e-9).
Vec4 ellipsoid_flow(const Vec4& z, double t, const EllipsoidParams& p);

// Generator (z0, z1) -> (e^{2 pi i / p} z0, e^{2 pi i q / p} z1) of the Z_p
// action with quotient L(p, q).
class LensAction {
 public:
  LensAction(int p, int q);
  int p() const { return p_; }
  int q() const { return q_; }
  Vec4 operator()(const Vec4& z) const;
  // Smallest n >= 1 with g^n = id, checked numerically.
  int order() const;

 private:
  int p_, q_;
};

struct EllipsoidIndices {
  int mu_p1_sq = 0;  // always 3
  int mu_p2_sq = 0;  // 2k + 1
  int k = 0;         // r2^2 / r1^2 in (k - 1, k)
};

// Throws DegeneracyError when r2^2 / r1^2 is near a rational.
EllipsoidIndices ellipsoid_indices(const EllipsoidParams& p);

enum class Fiber { P1, P2 };

// Prime period on the quotient: pi r_j^2 / 2.
double ellipsoid_period(Fiber f, const EllipsoidParams& p);

// Exact transverse path over the prime quotient period in the quaternion
// frame: rotation by (2 t)(1/r1^2 + 1/r2^2), so P1 turns by
// pi (1 + r1^2/r2^2) and P2 by pi (1 + r2^2/r1^2).
SymplecticPath ellipsoid_transverse_path(Fiber f, const EllipsoidParams& p, std::size_t samples = 513);

// Lift of the fiber on the ellipsoid in the state ordering, starting on the
// positive real axis of its coordinate line; period pi r_j^2, antipodal.
ClosedOrbit ellipsoid_fiber(Fiber f, const EllipsoidParams& p, std::size_t samples = 1025);

}  // namespace rp3
