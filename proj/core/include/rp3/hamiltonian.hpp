#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rp3/types.hpp"

namespace rp3 {

// Autonomous Hamiltonian on R^4 in the (x1, x2, y1, y2) ordering.
class Hamiltonian {
 public:
  virtual ~Hamiltonian() = default;

  virtual double value(const Vec4& x) const = 0;
  virtual Vec4 gradient(const Vec4& x) const = 0;
  virtual Mat4 hessian(const Vec4& x) const = 0;

  Vec4 vector_field(const Vec4& x) const { return j4() * gradient(x); }
};

// H = x^T Q x / 2 - offset; Q symmetric.
class QuadraticHamiltonian final : public Hamiltonian {
 public:
  explicit QuadraticHamiltonian(const Mat4& q, double offset = 0.0);

  double value(const Vec4& x) const override { return 0.5 * x.dot(q_ * x) - offset_; }
  Vec4 gradient(const Vec4& x) const override { return q_ * x; }
  Mat4 hessian(const Vec4&) const override { return q_; }

 private:
  Mat4 q_;
  double offset_;
};

// Uniformly distributed directions on S^3 from a seeded generator.
std::vector<Vec4> random_directions(std::size_t n, std::uint64_t seed);

// First crossing of {H = level} along center + t dir, t > 0, found by a
// scan with the given step followed by a bracketed root solve. Returns
// nothing when no crossing occurs before max_t. Requires H(center) < level.
std::optional<double> shoot_ray(const Hamiltonian& h, const Vec4& center, const Vec4& dir,
                                double level, double step, double max_t);

// Second fundamental form of {H = H(x)} at x: Hessian restricted to the
// tangent space divided by |grad H|. Returns its smallest eigenvalue.
double min_curvature(const Hamiltonian& h, const Vec4& x);

struct ConvexityResult {
  bool is_convex = false;
  double min_eig = 0;
  std::size_t argmin = 0;
};

ConvexityResult convexity_check(const Hamiltonian& h, const std::vector<Vec4>& points);

}  // namespace rp3
