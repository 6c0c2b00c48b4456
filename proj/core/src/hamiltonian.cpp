#include "rp3/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/tools/toms748_solve.hpp>

#include "rp3/errors.hpp"

namespace rp3 {

QuadraticHamiltonian::QuadraticHamiltonian(const Mat4& q, double offset)
    : q_(0.5 * (q + q.transpose())), offset_(offset) {
  if (!q.allFinite()) throw DomainError("QuadraticHamiltonian: non-finite matrix");
}

std::vector<Vec4> random_directions(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vec4> out;
  out.reserve(n);
  while (out.size() < n) {
    const Vec4 d(g(rng), g(rng), g(rng), g(rng));
    const double r = d.norm();
    if (r > 1e-8) out.push_back(d / r);
  }
  return out;
}

std::optional<double> shoot_ray(const Hamiltonian& h, const Vec4& center, const Vec4& dir,
                                double level, double step, double max_t) {
  auto g = [&](double t) { return h.value(center + t * dir) - level; };
  double a = 0, ga = g(0);
  if (!(ga < 0)) throw DomainError("shoot_ray: center is not inside the sublevel set");
  while (a < max_t) {
    const double b = std::min(a + step, max_t);
    const double gb = g(b);
    if (gb >= 0) {
      if (gb == 0) return b;
      std::uintmax_t iters = 200;
      auto tol = [](double x, double y) {
        return std::abs(x - y) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
      };
      auto [lo, hi] = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
      const double glo = g(lo), ghi = g(hi);
      return std::abs(glo) <= std::abs(ghi) ? lo : hi;
    }
    a = b;
    ga = gb;
  }
  return std::nullopt;
}

double min_curvature(const Hamiltonian& h, const Vec4& x) {
  const Vec4 grad = h.gradient(x);
  const double gn = grad.norm();
  if (!(gn > 1e-12)) throw NumericalError("min_curvature: gradient vanishes (critical point)");
  // Orthonormal basis of grad^perp from a Householder-completed frame.
  const Eigen::HouseholderQR<Eigen::Matrix<double, 4, 1>> qr(grad);
  const Mat4 q = qr.householderQ();
  const Eigen::Matrix<double, 4, 3> t = q.rightCols<3>();
  const Eigen::Matrix3d ii = t.transpose() * h.hessian(x) * t / gn;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (ii + ii.transpose()),
                                                          Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

ConvexityResult convexity_check(const Hamiltonian& h, const std::vector<Vec4>& points) {
  if (points.empty()) throw DomainError("convexity_check: empty sample");
  ConvexityResult r;
  r.min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double k = min_curvature(h, points[i]);
    if (k < r.min_eig) {
      r.min_eig = k;
      r.argmin = i;
    }
  }
  r.is_convex = r.min_eig > 0;
  return r;
}

}  // namespace rp3
