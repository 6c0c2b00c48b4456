#pragma once

// Transverse rotation along a geodesic of a Finsler two-sphere: the
// linearized flow a' = -K b, b' = a written as a + ib = r e^{i theta} gives
//   theta' = K(t) cos^2 theta + sin^2 theta.
// K is taken as already normalized (the metric scaled so that the declared
// bounds hold); scaling the metric is left to the caller.

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <vector>

namespace rp3 {

// Flag curvature sampled at knots 0 = t_0 < ... < t_n = L, linear in between.
struct CurvatureProfile {
  std::vector<double> t;
  std::vector<double> k;
  double k_lo = 0;  // declared bounds, checked against every sample
  double k_hi = std::numeric_limits<double>::infinity();
  double reversibility = 1;

  void validate() const;
  double length() const { return t.back(); }
  double operator()(double s) const;
  double min_k() const;
  double max_k() const;
  // (r / (r + 1))^2 < K <= 1 at every sample.
  bool pinched() const;

  static CurvatureProfile constant(double k, double length);
};

// theta(L) - theta(0) starting from theta0.
double rotation_angle(const CurvatureProfile& p, double theta0);

// Minimum of rotation_angle over theta0 in [0, pi) (the ODE is pi-periodic).
double min_rotation(const CurvatureProfile& p);

struct LoopBound {
  double delta_theta = 0;  // min over theta0 of the rotation along all loops
  int mu_lower = 0;        // 2k + 1 for the largest k with delta_theta > 2 pi k
  bool exceeds_four_pi = false;
};

// Rotation along the concatenated loops. Each loop must be longer than pi
// (strictly) and, in the normalized convention, K >= 1 throughout; both
// violations throw DomainError. To bound the index of a doubly traversed
// geodesic pass its loops twice.
LoopBound loop_index_bound(const std::vector<CurvatureProfile>& loops);

// Two-column CSV (t, K) with an optional header row.
CurvatureProfile read_profile_csv(std::istream& is);
CurvatureProfile load_profile_csv(const std::filesystem::path& path);

}  // namespace rp3
