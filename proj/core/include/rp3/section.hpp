#pragma once

// Disk-like surfaces of section bounded by an antipodally symmetric closed
// orbit on a star-shaped level {H = level} in R^4.
//
// A and B are the complex normal-mode coordinates of the linearization at
// the origin (A(x(t)) ~ e^{i omega_A t}), A being the mode that dominates on
// the boundary orbit P. Along P, B = h(arg A) and |A| = R(arg A). The
// defining function
//   F(x) = B(x) - h(arg A(x)) |A(x)| / R(arg A(x))
// is odd and homogeneous of degree one, and on the level it vanishes exactly
// on P. Pages are {arg F = theta}; the antipodal map swaps theta and
// theta + pi, so on the quotient each page is a rational disk whose boundary
// covers P twice. Section coordinates are (Re A, Im A) over the region
// |A| < R(arg A).

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include "rp3/hamiltonian.hpp"
#include "rp3/integrator.hpp"
#include "rp3/orbit.hpp"
#include "rp3/types.hpp"

namespace rp3 {

class SectionDef {
 public:
  using Complex = std::complex<double>;

  const Hamiltonian& hamiltonian() const { return *h_; }
  double level() const { return level_; }
  const ClosedOrbit& boundary() const { return boundary_; }
  double page_angle() const { return theta0_; }
  double margin() const { return margin_; }
  std::size_t margin_points() const { return margin_points_; }
  int harmonics() const { return int(hc_.size()) / 2; }

  Complex mode_a(const Vec4& x) const { return eta_a_.cwiseProduct(x.cast<Complex>()).sum(); }
  Complex mode_b(const Vec4& x) const { return eta_b_.cwiseProduct(x.cast<Complex>()).sum(); }
  Complex defining(const Vec4& x) const;
  double page_of(const Vec4& x) const { return std::arg(defining(x)); }

  // Boundary data as functions of phi = arg A.
  Complex boundary_b(double phi) const;
  double boundary_radius(double phi) const;
  Vec4 boundary_point(double phi) const;

  Vec2 coords(const Vec4& x) const;
  // 1 - |A| / R(arg A): 1 at the centre, 0 on the boundary.
  double interior_depth(const Vec2& a) const;
  // Point on the page theta with section coordinates a (|A| < R).
  Vec4 lift(const Vec2& a, double theta) const;
  Vec4 lift(const Vec2& a) const { return lift(a, theta0_); }

  // d(arg F)/dt and the normalized transversality <f, n> / (|f| |n|), with n
  // the page normal within the level.
  double angular_rate(const Vec4& x) const;
  double transversality(const Vec4& x) const;

 private:
  friend SectionDef build_section(std::shared_ptr<const Hamiltonian>, const ClosedOrbit&, double, int,
                                  double);
  SectionDef() = default;

  std::shared_ptr<const Hamiltonian> h_;
  double level_ = 0;
  ClosedOrbit boundary_;
  double theta0_ = 0;
  double margin_ = 0;
  std::size_t margin_points_ = 0;
  double scale_ = 1;
  Eigen::Vector4cd eta_a_, eta_b_;
  Mat4 from_modes_;                 // (Re A, Im A, Re B, Im B) -> x
  std::vector<Complex> hc_, rc_;    // Fourier coefficients, index m + K for |m| < K
};

// Builds the section and checks transversality on a polar grid (radii up to
// 0.95 R) over four pages. Throws NonTransverseError if the margin is below
// min_margin, DomainError if the orbit is not antipodal or its A-angle is not
// monotone.
SectionDef build_section(std::shared_ptr<const Hamiltonian> h, const ClosedOrbit& boundary,
                         double page_angle = 0.0, int grid = 12, double min_margin = 1e-3);

// PCR3BP section in the Levi-Civita chart.
SectionDef build_section(const ClosedOrbit& boundary, double page_angle = 0.0);

struct ReturnMapSample {
  Vec2 entry;
  Vec2 exit;
  double time = 0;
  Vec4 entry_state;
  Vec4 exit_state;          // after the antipodal identification
  bool near_binding = false;
};

struct ReturnOptions {
  double t_max = 1e4;
  double time_tol = 1e-11;
  double min_depth = 1e-4;  // required distance from the boundary
  IntegratorOptions integrator{1e-13, 1e-13, 0, 0, 50'000'000};
};

// First return to the page; throws NoReturnError after t_max.
ReturnMapSample return_map(const SectionDef& s, const Vec2& a, const ReturnOptions& opt = {});

// Successive returns along a single integration.
std::vector<ReturnMapSample> return_sequence(const SectionDef& s, const Vec2& a, int count,
                                             const ReturnOptions& opt = {});

// Polar grid of section coordinates: rings at depth fractions (k / rings) *
// max_fraction of R, with 6k points on ring k plus the centre.
std::vector<Vec2> section_grid(const SectionDef& s, int rings, double max_fraction = 0.9);

void write_return_csv(std::ostream& os, const std::vector<ReturnMapSample>& samples);

struct FixedPoint {
  Vec2 coords;
  double map_residual = 0;
  int newton_iterations = 0;
  ClosedOrbit orbit;  // lifted, antipodal; period = twice the return time
};

// Newton on a -> psi(a) - a from the best seeds of a polar grid.
FixedPoint find_fixed_point(const SectionDef& s, int rings = 6, const ReturnOptions& opt = {});

struct AreaDefect {
  double area = 0;        // integral of the Liouville form over the region boundary
  double image_area = 0;  // same over the image boundary
  double defect = 0;      // relative difference
};

// Region {|A| <= fraction R(arg A)} with its boundary sampled at n points.
AreaDefect area_defect(const SectionDef& s, double fraction, std::size_t n = 256,
                       const ReturnOptions& opt = {});

// Linking number of the two lifts after radial projection to S^3 (states
// read in C^2 through to_c2).
int verify_hopf_link(const ClosedOrbit& o1, const ClosedOrbit& o2);

}  // namespace rp3
