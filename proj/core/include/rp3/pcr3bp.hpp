#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rp3/hamiltonian.hpp"
#include "rp3/types.hpp"

namespace rp3 {

// Mass ratio mu in (0, 1) and energy parameter c (the level is H = -c).
// The light primary sits at the origin, the heavy one (mass mu) at (1, 0).
struct ModelParams {
  double mu = 0.5;
  double c = 2.0;

  void validate() const;
};

// The raw evaluation functions accept mu in [0, 1); mu = 0 removes the
// second primary (two-body limit in the rotating frame).
double hamiltonian(const PhaseState& s, double mu);
Vec4 hamiltonian_gradient(const PhaseState& s, double mu);
Mat4 hamiltonian_hessian(const PhaseState& s, double mu);
Vec4 hamiltonian_vf(const PhaseState& s, double mu);

// H = |p - a(q)|^2 / 2 + U(q) with a(q) = (q2, mu - q1).
double effective_potential(const Vec2& q, double mu);
Vec2 effective_potential_gradient(const Vec2& q, double mu);

class RotatingHamiltonian final : public Hamiltonian {
 public:
  explicit RotatingHamiltonian(double mu) : mu_(mu) {}
  double value(const Vec4& x) const override { return hamiltonian(PhaseState::from(x), mu_); }
  Vec4 gradient(const Vec4& x) const override { return hamiltonian_gradient(PhaseState::from(x), mu_); }
  Mat4 hessian(const Vec4& x) const override { return hamiltonian_hessian(PhaseState::from(x), mu_); }
  double mu() const { return mu_; }

 private:
  double mu_;
};

struct LagrangePoint {
  PhaseState state;  // p = a(q), so the kinetic term vanishes
  double value;
};

// points[0..4] are L1..L5 ordered by critical value (L1 lowest; L4 has q2 > 0).
struct LagrangeSet {
  std::array<LagrangePoint, 5> points;
};

LagrangeSet lagrange_points(double mu);

enum class Component { C0, C1, C2, forbidden };

const char* to_string(Component c);

// Hill-region component of the q-projection of s on the level H = -c.
Component classify_component(const PhaseState& s, const ModelParams& params);

// q = 2 v^2, p = u / conj(v) in complex notation.
PhaseState levi_civita(const RegState& r);

double kamiltonian(const RegState& r, const ModelParams& params);
Vec4 kamiltonian_gradient(const RegState& r, const ModelParams& params);
Mat4 kamiltonian_hessian(const RegState& r, const ModelParams& params);

// Sum of absolute values of the terms of K; the natural scale for relative
// error statements about K.
double kamiltonian_scale(const RegState& r, const ModelParams& params);

class RegularizedHamiltonian final : public Hamiltonian {
 public:
  explicit RegularizedHamiltonian(const ModelParams& p);
  double value(const Vec4& x) const override { return kamiltonian(RegState::from(x), p_); }
  Vec4 gradient(const Vec4& x) const override { return kamiltonian_gradient(RegState::from(x), p_); }
  Mat4 hessian(const Vec4& x) const override { return kamiltonian_hessian(RegState::from(x), p_); }
  const ModelParams& params() const { return p_; }

 private:
  ModelParams p_;
};

struct HypersurfaceSample {
  ModelParams params;
  std::vector<RegState> points;
  std::vector<double> residuals;  // K at each point
  bool connected = false;         // nearest-neighbour graph is connected
};

// Points on the bounded component of {K = 0} containing the collision
// circle, by ray shooting from the origin. Every ray also yields its
// antipode, so the result has 2 ceil(n/2) regular points followed by
// 2 ceil(adversarial/2) points whose direction is nearly tangent to the
// collision circle {v = 0}.
HypersurfaceSample sample_hypersurface(const ModelParams& params, std::size_t n,
                                       std::uint64_t seed = 1, std::size_t adversarial = 0);

ConvexityResult convexity_check(const ModelParams& params, const HypersurfaceSample& sample);

// Columns v1,v2,u1,u2,K_residual at 17 significant digits.
void write_csv(std::ostream& os, const HypersurfaceSample& sample);

}  // namespace rp3
