#include <doctest.h>

#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include "rp3/ellipsoid.hpp"
#include "rp3/errors.hpp"
#include "rp3/pcr3bp.hpp"
#include "support.hpp"

using namespace rp3;
using rp3::test::Rng;

namespace {

RegState random_regular(Rng& rng) {
  for (;;) {
    const RegState r{test::uniform(rng, -1, 1), test::uniform(rng, -1, 1), test::uniform(rng, -1.5, 1.5),
                     test::uniform(rng, -1.5, 1.5)};
    const double v = std::hypot(r.v1, r.v2);
    const PhaseState q = PhaseState::from(Vec4(2 * (r.v1 * r.v1 - r.v2 * r.v2), 4 * r.v1 * r.v2, 0, 0));
    if (v > 0.1 && std::hypot(q.q1 - 1, q.q2) > 0.05) return r;
  }
}

PhaseState random_phase(Rng& rng) {
  for (;;) {
    const PhaseState s{test::uniform(rng, -2, 2), test::uniform(rng, -2, 2), test::uniform(rng, -2, 2),
                       test::uniform(rng, -2, 2)};
    if (std::hypot(s.q1, s.q2) > 0.1 && std::hypot(s.q1 - 1, s.q2) > 0.1) return s;
  }
}

// Connected components of the allowed region {U <= -c} on a square grid;
// labels 0, 1, 2 for the components around the light primary, the heavy
// primary and infinity, -1 forbidden.
struct HillGrid {
  static constexpr int n = 601;
  static constexpr double lo = -3, hi = 3;
  std::vector<int> label;
  std::vector<double> u;
  double step = (hi - lo) / (n - 1);

  Vec2 at(int i, int k) const { return {lo + i * step, lo + k * step}; }

  HillGrid(double mu, double c) : label(n * n, -1), u(n * n) {
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const Vec2 q = at(i, k);
        const double r0 = q.norm(), r1 = (q - Vec2(1, 0)).norm();
        u[i * n + k] = (r0 < 1e-9 || r1 < 1e-9) ? -1e300 : effective_potential(q, mu);
      }
    auto flood = [&](int i0, int k0, int id) {
      std::queue<std::pair<int, int>> todo;
      todo.push({i0, k0});
      label[i0 * n + k0] = id;
      while (!todo.empty()) {
        const auto [i, k] = todo.front();
        todo.pop();
        const int di[4] = {1, -1, 0, 0}, dk[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int a = i + di[d], b = k + dk[d];
          if (a < 0 || b < 0 || a >= n || b >= n) continue;
          if (label[a * n + b] != -1 || u[a * n + b] > -c) continue;
          label[a * n + b] = id;
          todo.push({a, b});
        }
      }
    };
    const int centre = (n - 1) / 2;
    const int heavy = int(std::lround((1 - lo) / step));
    flood(centre, centre, 0);
    if (label[heavy * n + centre] == -1) flood(heavy, centre, 1);
    flood(0, 0, 2);
  }
};

}  // namespace

TEST_CASE("Hamiltonian at hand-computed points") {
  CHECK(hamiltonian({2, 0, 0, 0}, 0.5) == doctest::Approx(-0.75).epsilon(1e-15));
  CHECK(hamiltonian({2, 0, 0, 1}, 0.5) == doctest::Approx(1.25).epsilon(1e-15));
  const Vec4 f = hamiltonian_vf({2, 0, 0, 0}, 0.5);
  CHECK((f - Vec4(0, 1.5, -0.625, 0)).norm() < 1e-15);
}

TEST_CASE("gradient, Hessian and field against finite differences") {
  Rng rng(41);
  for (int n = 0; n < 200; ++n) {
    const double mu = test::uniform(rng, 0.01, 0.99);
    const PhaseState s = random_phase(rng);
    auto h = [&](const Vec4& x) { return hamiltonian(PhaseState::from(x), mu); };
    const Vec4 g = hamiltonian_gradient(s, mu);
    CHECK(test::rel_diff(g, test::fd_gradient(h, s.vec()), 1e-3) < 1e-6);
    const Vec4 f = hamiltonian_vf(s, mu);
    CHECK(std::abs(g.dot(f)) < 1e-12 * (1 + g.squaredNorm()));
    CHECK(test::rel_diff(f, j4() * test::fd_gradient(h, s.vec()), 1e-3) < 1e-6);
    const Mat4 hs = hamiltonian_hessian(s, mu);
    for (int i = 0; i < 4; ++i) {
      auto gi = [&](const Vec4& x) { return hamiltonian_gradient(PhaseState::from(x), mu)[i]; };
      CHECK(test::rel_diff(Vec4(hs.row(i).transpose()), test::fd_gradient(gi, s.vec()), 1e-2) < 1e-5);
    }
  }
}

TEST_CASE("Lagrange points of equal masses") {
  const LagrangeSet l = lagrange_points(0.5);
  CHECK(std::abs(l.points[0].state.q1 - 0.5) < 1e-12);
  CHECK(std::abs(l.points[0].state.q2) < 1e-12);
  CHECK(std::abs(l.points[3].state.q1 - 0.5) < 1e-10);
  CHECK(std::abs(l.points[3].state.q2 - std::sqrt(3.0) / 2) < 1e-10);
  for (const LagrangePoint& p : l.points) {
    CHECK(hamiltonian_gradient(p.state, 0.5).norm() < 1e-9);
    CHECK(std::abs(hamiltonian(p.state, 0.5) - p.value) < 1e-12);
  }
  for (int i = 1; i < 5; ++i) CHECK(l.points[i - 1].value <= l.points[i].value + 1e-12);
}

TEST_CASE("first critical value approaches -3/2 as the heavy mass takes over") {
  double prev = -1e9;
  for (double mu : {0.9, 0.99, 0.999}) {
    const double v = lagrange_points(mu).points[0].value;
    CHECK(std::abs(v + 1.5) < std::abs(prev + 1.5));
    prev = v;
  }
  CHECK(std::abs(prev + 1.5) < 0.05);
}

TEST_CASE("model parameters are validated") {
  CHECK_THROWS_AS((ModelParams{0.0, 2.0}.validate()), DomainError);
  CHECK_THROWS_AS((ModelParams{1.0, 2.0}.validate()), DomainError);
  CHECK_NOTHROW((ModelParams{0.99, 2.0}.validate()));
  CHECK_THROWS_AS(classify_component({0.1, 0, 0, 0}, ModelParams{0.99, 1.0}), DomainError);
}

TEST_CASE("Hill-region components at hand-picked points") {
  const ModelParams p{0.99, 2.0};
  CHECK(classify_component({1e-3, 0, 0, 0}, p) == Component::C0);
  CHECK(classify_component({50, 0, 0, 0}, p) == Component::C2);
  CHECK(classify_component({0.5, 0.5, 0, 0}, p) == Component::forbidden);
}

TEST_CASE("Hill-region components match a flood-filled grid") {
  Rng rng(42);
  for (const ModelParams p : {ModelParams{0.99, 2.0}, ModelParams{0.5, 2.2}, ModelParams{0.8, 2.0}}) {
    const HillGrid grid(p.mu, p.c);
    int tested = 0;
    while (tested < 150) {
      const int i = int(test::uniform(rng, 1, HillGrid::n - 2)), k = int(test::uniform(rng, 1, HillGrid::n - 2));
      const double u = grid.u[i * HillGrid::n + k];
      if (std::abs(u + p.c) < 0.05 || u < -1e200) continue;
      const Vec2 q = grid.at(i, k);
      const Vec2 a(q.y(), p.mu - q.x());  // p = a(q): zero kinetic term
      const Component c = classify_component({q.x(), q.y(), a.x(), a.y()}, p);
      const int lab = grid.label[i * HillGrid::n + k];
      const Component expect = lab == -1 ? Component::forbidden
                               : lab == 0 ? Component::C0
                               : lab == 1 ? Component::C1
                                          : Component::C2;
      CHECK(c == expect);
      // Reversibility symmetry.
      CHECK(classify_component({q.x(), -q.y(), -a.x(), a.y()}, p) == c);
      ++tested;
    }
  }
}

TEST_CASE("Levi-Civita map at hand-computed points") {
  const PhaseState a = levi_civita({1, 0, 0, 1});
  CHECK((a.vec() - Vec4(2, 0, 0, 1)).norm() < 1e-15);
  const PhaseState b = levi_civita({0, 1, 1, 0});
  CHECK((b.vec() - Vec4(-2, 0, 0, 1)).norm() < 1e-15);
  CHECK_THROWS_AS(levi_civita({0, 0, 1, 0}), SingularityError);
}

TEST_CASE("Levi-Civita map is even") {
  Rng rng(43);
  for (int n = 0; n < 100; ++n) {
    const RegState r = random_regular(rng);
    const PhaseState s = levi_civita(r);
    const PhaseState t = levi_civita(RegState::from(-r.vec()));
    CHECK((s.vec() - t.vec()).norm() == 0.0);
  }
}

TEST_CASE("regularized Hamiltonian at hand-computed points") {
  CHECK(kamiltonian({1, 0, 0, 1}, {0.5, 2.0}) == doctest::Approx(3.25).epsilon(1e-15));
  Rng rng(44);
  for (int n = 0; n < 20; ++n) {
    const double mu = test::uniform(rng, 0.01, 0.99);
    const double u1 = test::uniform(rng, -2, 2), u2 = test::uniform(rng, -2, 2);
    const double k = kamiltonian({0, 0, u1, u2}, {mu, 2.0});
    CHECK(k == doctest::Approx(0.5 * (u1 * u1 + u2 * u2) - 0.5 * (1 - mu)).epsilon(1e-15));
  }
}

TEST_CASE("property: regularization identity and antipodal invariance") {
  Rng rng(45);
  for (int n = 0; n < 1000; ++n) {
    const ModelParams p{test::uniform(rng, 0.01, 0.999), test::uniform(rng, 1.6, 5)};
    const RegState r = random_regular(rng);
    const double s = r.v1 * r.v1 + r.v2 * r.v2;
    const double k = kamiltonian(r, p);
    const double rhs = s * (hamiltonian(levi_civita(r), p.mu) + p.c);
    CHECK(std::abs(k - rhs) / kamiltonian_scale(r, p) < 1e-12);
    CHECK(test::rel_diff(k / s, hamiltonian(levi_civita(r), p.mu) + p.c, 1.0) < 1e-10);
    const double ka = kamiltonian(RegState::from(-r.vec()), p);
    CHECK(std::abs(ka - k) <= 1e-14 * std::max(1.0, std::abs(k)));
  }
}

TEST_CASE("regularized gradient and Hessian against finite differences") {
  Rng rng(46);
  for (int n = 0; n < 200; ++n) {
    const ModelParams p{test::uniform(rng, 0.01, 0.99), test::uniform(rng, 1.6, 4)};
    const RegState r = random_regular(rng);
    auto k = [&](const Vec4& x) { return kamiltonian(RegState::from(x), p); };
    CHECK(test::rel_diff(kamiltonian_gradient(r, p), test::fd_gradient(k, r.vec()), 1e-3) < 1e-6);
    const Mat4 hs = kamiltonian_hessian(r, p);
    for (int i = 0; i < 4; ++i) {
      auto gi = [&](const Vec4& x) { return kamiltonian_gradient(RegState::from(x), p)[i]; };
      CHECK(test::rel_diff(Vec4(hs.row(i).transpose()), test::fd_gradient(gi, r.vec()), 1e-2) < 1e-5);
    }
  }
}

TEST_CASE("hypersurface samples lie on the level and are antipodally closed") {
  const ModelParams p{0.99, 2.0};
  const HypersurfaceSample s = sample_hypersurface(p, 300, 7, 30);
  CHECK(s.points.size() == 330);
  CHECK(s.connected);
  std::set<std::array<double, 4>> pts;
  for (const RegState& r : s.points) pts.insert({r.v1, r.v2, r.u1, r.u2});
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    CHECK(std::abs(s.residuals[i]) < 1e-10);
    CHECK(std::abs(kamiltonian(s.points[i], p)) < 1e-10);
    const RegState& r = s.points[i];
    CHECK(pts.count({-r.v1, -r.v2, -r.u1, -r.u2}) == 1);
  }
}

TEST_CASE("hypersurface approaches the harmonic ellipsoid for large c") {
  const double mu = 0.5;
  double prev = 1e9;
  for (double c : {25.0, 100.0, 400.0}) {
    const HypersurfaceSample s = sample_hypersurface({mu, c}, 200, 3);
    double worst = 0;
    for (const RegState& r : s.points) {
      const double lead = 0.5 * (r.u1 * r.u1 + r.u2 * r.u2) + c * (r.v1 * r.v1 + r.v2 * r.v2);
      worst = std::max(worst, std::abs(lead - 0.5 * (1 - mu)) / (0.5 * (1 - mu)));
    }
    CHECK(worst < prev);
    prev = worst;
  }
  CHECK(prev < 0.1);
}

TEST_CASE("hypersurface sampling is deterministic given the seed") {
  const HypersurfaceSample a = sample_hypersurface({0.9, 2.5}, 50, 99, 6);
  const HypersurfaceSample b = sample_hypersurface({0.9, 2.5}, 50, 99, 6);
  std::ostringstream sa, sb;
  write_csv(sa, a);
  write_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("v1,v2,u1,u2,K_residual\n", 0) == 0);
}

TEST_CASE("convexity of model levels") {
  Rng rng(47);
  std::vector<Vec4> sphere;
  for (int n = 0; n < 200; ++n) sphere.push_back(test::random_unit4(rng));
  const QuadraticHamiltonian round(Mat4::Identity(), 0.5);
  const ConvexityResult r = convexity_check(round, sphere);
  CHECK(r.is_convex);
  CHECK(r.min_eig == doctest::Approx(1.0).epsilon(1e-12));

  const EllipsoidHamiltonian e({1.0, 1.5});
  std::vector<Vec4> on_e;
  for (const Vec4& d : sphere) on_e.push_back(d / std::sqrt(e.value(d) + 1));
  const ConvexityResult re = convexity_check(e, on_e);
  CHECK(re.is_convex);
  CHECK(re.min_eig > 0);
}

TEST_CASE("regularized level at (0.99, 2) is convex on 2000 + 200 samples") {
  const ModelParams p{0.99, 2.0};
  const ConvexityResult r = convexity_check(p, sample_hypersurface(p, 2000, 1, 200));
  CHECK(r.is_convex);
  CHECK(r.min_eig > 0);
}
