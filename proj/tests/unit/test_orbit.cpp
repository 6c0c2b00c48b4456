#include <doctest.h>

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "rp3/ellipsoid.hpp"
#include "rp3/errors.hpp"
#include "rp3/orbit.hpp"
#include "support.hpp"

using namespace rp3;
using rp3::test::Rng;

namespace {

constexpr double pi = std::numbers::pi;

const ClosedOrbit& retrograde_099() {
  static const ClosedOrbit o = find_retrograde({0.99, 2.0});
  return o;
}

Mat4 random_symmetric(Rng& rng) {
  Mat4 a;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) a(i, k) = test::uniform(rng, -1, 1);
  return 0.5 * (a + a.transpose());
}

int eigenvalues_near_one(const Mat4& m, double tol) {
  Eigen::EigenSolver<Mat4> es(m, false);
  int n = 0;
  for (int k = 0; k < 4; ++k) n += std::abs(es.eigenvalues()[k] - std::complex<double>(1, 0)) < tol;
  return n;
}

}  // namespace

TEST_CASE("two-body limit conserves energy and angular momentum") {
  const RotatingHamiltonian h(0.0);
  const Vec4 x0(1, 0, 0, 1.1);
  auto energy = [](const Vec4& x) { return 0.5 * (x[2] * x[2] + x[3] * x[3]) - 1 / std::hypot(x[0], x[1]); };
  auto angular = [](const Vec4& x) { return x[0] * x[3] - x[1] * x[2]; };
  const Trajectory tr = integrate(h, x0, 0, 50);
  for (const Vec4& x : tr.sample(500)) {
    CHECK(std::abs(energy(x) - energy(x0)) < 1e-10);
    CHECK(std::abs(angular(x) - angular(x0)) < 1e-10);
  }
}

TEST_CASE("harmonic oscillator integrates circles") {
  const QuadraticHamiltonian h(Mat4::Identity());
  const Vec4 x0(0.3, -0.2, 0.5, 0.1);
  const Trajectory tr = integrate(h, x0, 0, 10);
  for (double t : {0.7, 3.1, 10.0}) {
    const Vec4 exact(x0[0] * std::cos(t) + x0[2] * std::sin(t), x0[1] * std::cos(t) + x0[3] * std::sin(t),
                     x0[2] * std::cos(t) - x0[0] * std::sin(t), x0[3] * std::cos(t) - x0[1] * std::sin(t));
    CHECK((tr(t) - exact).norm() < 1e-10);
  }
}

TEST_CASE("rotating chart refuses to approach a primary") {
  const Vec4 toward(0.01, 0, -5, 0);
  CHECK_THROWS_AS(integrate(toward, {0.5, 2.0}, 0, 1, Chart::rotating), SingularityError);
}

TEST_CASE("energy drift over t = 100 and self-convergence") {
  const ModelParams p{0.99, 2.0};
  const RegularizedHamiltonian h(p);
  const HypersurfaceSample s = sample_hypersurface(p, 4, 5);
  for (const RegState& r : s.points) {
    const Trajectory tr = integrate(h, r.vec(), 0, 100);
    double drift = 0;
    for (const Vec4& x : tr.sample(2001)) drift = std::max(drift, std::abs(h.value(x) - h.value(r.vec())));
    CHECK(drift < 1e-8);
    const Trajectory fine = integrate(h, r.vec(), 0, 100, {5e-13, 5e-13});
    double fine_drift = 0;
    for (const Vec4& x : fine.sample(2001)) fine_drift = std::max(fine_drift, std::abs(h.value(x) - h.value(r.vec())));
    CHECK(fine_drift <= std::max(drift, 1e-13));
  }
}

TEST_CASE("variational flow of a quadratic Hamiltonian is the matrix exponential") {
  Rng rng(51);
  for (int n = 0; n < 5; ++n) {
    const Mat4 q = random_symmetric(rng);
    const QuadraticHamiltonian h(q);
    const auto var = integrate_variational(h, test::random_vec4(rng), 0, 1.5, 4);
    for (std::size_t i = 0; i < var.times.size(); ++i) {
      const Mat4 expect = (var.times[i] * j4() * q).exp();
      CHECK((var.matrices[i] - expect).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, expect.norm()));
    }
  }
}

TEST_CASE("variational matrices are symplectic and match bumped trajectories") {
  Rng rng(52);
  const ModelParams p{0.99, 2.0};
  const RegularizedHamiltonian h(p);
  const HypersurfaceSample s = sample_hypersurface(p, 6, 8);
  for (const RegState& r : s.points) {
    const auto var = integrate_variational(h, r.vec(), 0, 2.0, 9);
    for (const Mat4& m : var.matrices) {
      CHECK(std::abs(m.determinant() - 1) < 1e-9);
      CHECK(is_symplectic(m));
    }
    const double eps = 1e-6;
    for (int c = 0; c < 4; ++c) {
      Vec4 e = Vec4::Zero();
      e[c] = eps;
      const Vec4 plus = integrate(h, r.vec() + e, 0, 2.0)(2.0);
      const Vec4 minus = integrate(h, r.vec() - e, 0, 2.0)(2.0);
      const Vec4 fd = (plus - minus) / (2 * eps);
      CHECK((fd - var.matrices.back().col(c)).norm() < 1e-5 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("retrograde orbit at (0.99, 2)") {
  const ClosedOrbit& o = retrograde_099();
  CHECK(o.chart == Chart::levi_civita);
  CHECK(o.antipodal);
  CHECK(o.symmetry == SymmetryTag::doubly_symmetric);
  CHECK(o.shooting_residual < 1e-10);
  CHECK(o.closure_residual < 1e-8);
  CHECK(o.energy_residual < 1e-9);
  CHECK(q_winding(o) == -1);
  CHECK(o.samples.size() % 2 == 1);

  // Reversibility: x(T - t) = R x(t) with R(v1, v2, u1, u2) = (v1, -v2, -u1, u2).
  const std::size_t n = o.samples.size();
  double rev = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec4& a = o.samples[i];
    const Vec4 ra(a[0], -a[1], -a[2], a[3]);
    rev = std::max(rev, (o.samples[n - 1 - i] - ra).norm());
  }
  CHECK(rev < 1e-7);

  // Antipodal invariance over half the lifted period.
  const auto h = chart_hamiltonian(*o.params, o.chart);
  const Vec4 half = integrate(*h, o.initial(), 0, 0.5 * o.period)(0.5 * o.period);
  CHECK((half + o.initial()).norm() < 1e-7);
  CHECK((o.samples[(n - 1) / 2] + o.initial()).norm() < 1e-7);
}

TEST_CASE("Newton on the shooting map converges quadratically") {
  const ClosedOrbit& o = retrograde_099();
  const ClosedOrbit r = refine_retrograde({0.99, 2.0}, o.initial()[0] * (1 + 3e-2), 0.25 * o.period * (1 - 3e-2));
  // Far enough out that several steps lie above the rounding floor.
  CHECK(std::abs(r.period - o.period) < 1e-9);
  const std::vector<double> orders = convergence_orders(r.newton_history);
  REQUIRE_FALSE(orders.empty());
  CHECK(orders.back() >= 1.8);
}

TEST_CASE("finite-difference Jacobian reaches the same orbit") {
  RetrogradeOptions opt;
  opt.variational_jacobian = false;
  const ClosedOrbit& o = retrograde_099();
  const ClosedOrbit r = refine_retrograde({0.99, 2.0}, o.initial()[0] * (1 + 1e-4), 0.25 * o.period, opt);
  CHECK(std::abs(r.period - o.period) < 1e-9);
}

TEST_CASE("counterclockwise symmetric orbit winds the other way") {
  const ClosedOrbit o = find_symmetric_orbit({0.99, 2.0}, Orientation::counterclockwise);
  CHECK(q_winding(o) == 1);
  CHECK(o.shooting_residual < 1e-10);
}

TEST_CASE("monodromy invariants of the retrograde orbit") {
  const ClosedOrbit& o = retrograde_099();
  const Monodromy m = monodromy(o);
  CHECK(m.quotient);
  CHECK(symplectic_defect(m.full) < 1e-8);
  CHECK(eigenvalues_near_one(m.full, 1e-6) >= 2);
  CHECK(std::abs(m.transverse.determinant() - 1) < 1e-8);
  for (const Mat2& s : m.path.samples()) CHECK(is_symplectic(s));

  const OrbitClassification c = classify(m);
  REQUIRE(c.mu_cz_doubled.has_value());
  const IterateIndex it = iterate_index(c.report.rho, 2, c.report.floquet, c.report.mu_cz);
  CHECK(*c.mu_cz_doubled == it.mu_n);

  const Monodromy fine = monodromy(o, 4097);
  CHECK(std::abs(fine.transverse.trace() - m.transverse.trace()) < 1e-6);
}

TEST_CASE("Floquet multipliers do not depend on the time parametrization") {
  const ClosedOrbit& o = retrograde_099();
  const RegularizedHamiltonian h(*o.params);
  const Monodromy m = monodromy(h, o);
  const test::WeightedHamiltonian w(h, 0.4);
  const double half = antipodal_return_time(w, o.initial(), 2 * o.period);
  const ClosedOrbit ow = make_closed_orbit(w, o.initial(), 2 * half, true);
  const Monodromy mw = monodromy(w, ow);
  const auto a = floquet(m.transverse).multipliers, b = floquet(mw.transverse).multipliers;
  const double d = std::min(std::abs(a.first - b.first) + std::abs(a.second - b.second),
                            std::abs(a.first - b.second) + std::abs(a.second - b.first));
  CHECK(d < 1e-6);
}

TEST_CASE("round sphere: the quotient monodromy is the identity") {
  const QuadraticHamiltonian h(Mat4::Identity(), 0.5);
  const Vec4 x0 = Vec4(1, 2, -1, 0.5).normalized();
  const ClosedOrbit o = make_closed_orbit(h, x0, 2 * pi, true);
  const Monodromy m = monodromy(h, o);
  CHECK((m.full - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m.transverse - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ellipsoid fiber P1: transverse return over the S^3 period") {
  const EllipsoidParams p{1.0, std::sqrt(std::numbers::sqrt2)};
  const EllipsoidHamiltonian h(p);
  const ClosedOrbit o = ellipsoid_fiber(Fiber::P1, p);
  const Monodromy m = monodromy(h, o);
  const Mat2 twice = m.transverse * m.transverse;
  CHECK(std::abs(twice.trace() - 2 * std::cos(2 * pi * p.ratio())) < 1e-8);
  CHECK(std::abs(m.transverse.determinant() - 1) < 1e-8);
}

TEST_CASE("make_closed_orbit rejects even sample counts and non-antipodal lifts") {
  const QuadraticHamiltonian h(Mat4::Identity(), 0.5);
  const Vec4 x0(1, 0, 0, 0);
  CHECK_THROWS_AS(make_closed_orbit(h, x0, 2 * pi, true, 2048), DomainError);
  CHECK_THROWS(make_closed_orbit(h, x0, 3.0, true));
}

TEST_CASE("antipodal return time of the harmonic flow") {
  const QuadraticHamiltonian h(Mat4::Identity(), 0.5);
  CHECK(std::abs(antipodal_return_time(h, Vec4(0.6, 0, 0, 0.8), 10) - pi) < 1e-12);
  const QuadraticHamiltonian no_return(Mat4::Identity() * 0.1, 0.5);
  CHECK_THROWS_AS(antipodal_return_time(no_return, Vec4(1, 0, 0, 0), 5), NoReturnError);
}

TEST_CASE("chart names round-trip") {
  for (Chart c : {Chart::rotating, Chart::levi_civita, Chart::ellipsoid})
    CHECK(chart_from_string(to_string(c)) == c);
  CHECK_THROWS(chart_from_string("polar"));
}
