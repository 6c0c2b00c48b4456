#include "rp3/pcr3bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rp3/errors.hpp"

namespace rp3 {

namespace {

constexpr double tol_collision = 1e-12;

void check_mu_raw(double mu) {
  if (!(mu >= 0 && mu < 1)) throw DomainError("mass ratio must lie in [0, 1)");
}

// Gravitational part V(q) = -(1-mu)/|q| - mu/|q - e1| and its derivatives.
struct Gravity {
  double v;
  Vec2 g;
  Eigen::Matrix2d h;
};

void add_point_mass(Gravity& out, const Vec2& d, double m) {
  const double r = d.norm();
  if (r < tol_collision) throw SingularityError("collision configuration in the rotating chart");
  const double r3 = r * r * r;
  out.v -= m / r;
  out.g += m / r3 * d;
  const Vec2 n = d / r;
  out.h += m / r3 * (Eigen::Matrix2d::Identity() - 3.0 * n * n.transpose());
}

Gravity gravity(const Vec2& q, double mu) {
  Gravity out{0.0, Vec2::Zero(), Eigen::Matrix2d::Zero()};
  add_point_mass(out, q, 1.0 - mu);
  if (mu > 0) add_point_mass(out, q - Vec2(1, 0), mu);
  return out;
}

// Derivative of U along the q1-axis.
double collinear_slope(double x, double mu) {
  return -(x - mu) + (1 - mu) * x / std::pow(std::abs(x), 3) +
         mu * (x - 1) / std::pow(std::abs(x - 1), 3);
}

double collinear_curvature(double x, double mu) {
  return -1.0 - 2 * (1 - mu) / std::pow(std::abs(x), 3) - 2 * mu / std::pow(std::abs(x - 1), 3);
}

// Root of the strictly decreasing collinear slope inside (a, b); infinite
// ends are represented by a large finite probe.
double collinear_root(double a, double b, double mu, const char* which) {
  auto f = [mu](double x) { return collinear_slope(x, mu); };
  double lo = a, hi = b, flo = 0, fhi = 0;
  bool ok_lo = false, ok_hi = false;
  const double w = std::isfinite(b - a) ? b - a : 1.0;
  for (int k = 1; k <= 45 && !(ok_lo && ok_hi); ++k) {
    const double d = std::ldexp(1.0, -k);
    if (!ok_lo) {
      lo = std::isfinite(a) ? a + d * w : b - std::ldexp(1.0, k);
      flo = f(lo);
      ok_lo = flo > 0;
    }
    if (!ok_hi) {
      hi = std::isfinite(b) ? b - d * w : a + std::ldexp(1.0, k);
      fhi = f(hi);
      ok_hi = fhi < 0;
    }
  }
  if (!(ok_lo && ok_hi))
    throw NumericalError(fmt::format("lagrange_points: no sign change for {} in [{}, {}] (f = {}, {})",
                                     which, lo, hi, flo, fhi));
  std::uintmax_t iters = 200;
  auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-15 * std::max(1.0, std::abs(x)); };
  auto [r0, r1] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  double x = 0.5 * (r0 + r1);
  for (int k = 0; k < 3; ++k) x -= f(x) / collinear_curvature(x, mu);
  return x;
}

LagrangePoint make_point(const Vec2& q, double mu) {
  PhaseState s{q[0], q[1], q[1], mu - q[0]};
  return {s, hamiltonian(s, mu)};
}

}  // namespace

void ModelParams::validate() const {
  if (!(mu > 0 && mu < 1)) throw DomainError("mu must lie in the open interval (0, 1)");
  if (!std::isfinite(c)) throw DomainError("c must be finite");
}

double effective_potential(const Vec2& q, double mu) {
  check_mu_raw(mu);
  return -0.5 * (q - Vec2(mu, 0)).squaredNorm() + gravity(q, mu).v;
}

Vec2 effective_potential_gradient(const Vec2& q, double mu) {
  check_mu_raw(mu);
  return -(q - Vec2(mu, 0)) + gravity(q, mu).g;
}

double hamiltonian(const PhaseState& s, double mu) {
  check_mu_raw(mu);
  const Gravity g = gravity({s.q1, s.q2}, mu);
  return 0.5 * (s.p1 * s.p1 + s.p2 * s.p2) + s.q1 * s.p2 - s.p1 * s.q2 - mu * s.p2 + g.v;
}

Vec4 hamiltonian_gradient(const PhaseState& s, double mu) {
  check_mu_raw(mu);
  const Gravity g = gravity({s.q1, s.q2}, mu);
  return {s.p2 + g.g[0], -s.p1 + g.g[1], s.p1 - s.q2, s.p2 + s.q1 - mu};
}

Mat4 hamiltonian_hessian(const PhaseState& s, double mu) {
  check_mu_raw(mu);
  const Gravity g = gravity({s.q1, s.q2}, mu);
  Mat4 h = Mat4::Zero();
  h.topLeftCorner<2, 2>() = g.h;
  h(2, 2) = h(3, 3) = 1.0;
  h(0, 3) = h(3, 0) = 1.0;
  h(1, 2) = h(2, 1) = -1.0;
  return h;
}

Vec4 hamiltonian_vf(const PhaseState& s, double mu) {
  return j4() * hamiltonian_gradient(s, mu);
}

LagrangeSet lagrange_points(double mu) {
  if (!(mu > 0 && mu < 1)) throw DomainError("lagrange_points: mu must lie in (0, 1)");
  const double inf = std::numeric_limits<double>::infinity();
  std::array<LagrangePoint, 5> pts = {
      make_point({collinear_root(0.0, 1.0, mu, "the point between the primaries"), 0.0}, mu),
      make_point({collinear_root(-inf, 0.0, mu, "the point beyond the light primary"), 0.0}, mu),
      make_point({collinear_root(1.0, inf, mu, "the point beyond the heavy primary"), 0.0}, mu),
      make_point({0.5, std::sqrt(3.0) / 2}, mu),
      make_point({0.5, -std::sqrt(3.0) / 2}, mu),
  };
  std::stable_sort(pts.begin(), pts.end(),
                   [](const auto& a, const auto& b) { return a.value < b.value; });
  for (const auto& p : pts)
    if (hamiltonian_gradient(p.state, mu).norm() > 1e-10)
      throw NumericalError("lagrange_points: residual above 1e-10");
  return {pts};
}

const char* to_string(Component c) {
  switch (c) {
    case Component::C0: return "C0";
    case Component::C1: return "C1";
    case Component::C2: return "C2";
    case Component::forbidden: return "forbidden";
  }
  return "?";
}

Component classify_component(const PhaseState& s, const ModelParams& params) {
  params.validate();
  const double h1 = lagrange_points(params.mu).points[0].value;
  if (!(-params.c < h1))
    throw DomainError("classify_component: energy -c is not below the first critical value");
  const double level = -params.c;
  const double mu = params.mu;
  Vec2 q(s.q1, s.q2);
  if (effective_potential(q, mu) > level) return Component::forbidden;

  // All critical values of U exceed the level, so steepest descent stays in
  // the component and ends at a primary or at infinity.
  const Vec2 e1(1, 0);
  for (int it = 0; it < 100000; ++it) {
    const double r0 = q.norm(), r1 = (q - e1).norm();
    if (r0 > 2.0) return Component::C2;
    if (r0 < 1e-6) return Component::C0;
    if (r1 < 1e-6) return Component::C1;
    const Vec2 g = effective_potential_gradient(q, mu);
    const double gn = g.norm();
    double h = std::min({0.05 * r0, 0.05 * r1, 0.1});
    const double u = effective_potential(q, mu);
    for (;;) {
      const Vec2 trial = q - h * g / gn;
      if (effective_potential(trial, mu) < u) {
        q = trial;
        break;
      }
      h *= 0.5;
      if (h < 1e-14) throw NumericalError("classify_component: steepest descent stalled");
    }
  }
  throw NumericalError("classify_component: steepest descent did not terminate");
}

PhaseState levi_civita(const RegState& r) {
  const double s = r.v1 * r.v1 + r.v2 * r.v2;
  if (s == 0) throw SingularityError("levi_civita: v = 0 is the collision chart boundary");
  return {2 * (r.v1 * r.v1 - r.v2 * r.v2), 4 * r.v1 * r.v2, (r.u1 * r.v1 - r.u2 * r.v2) / s,
          (r.u1 * r.v2 + r.u2 * r.v1) / s};
}

namespace {

struct KTerms {
  double s, lterm, e;
};

KTerms k_terms(const RegState& r) {
  const double a = r.v1, b = r.v2;
  const double s = a * a + b * b;
  const double e = 4 * s * s - 4 * (a * a - b * b) + 1;
  if (std::sqrt(std::max(e, 0.0)) < tol_collision)
    throw SingularityError("kamiltonian: heavy-primary collision (2 v^2 = 1)");
  return {s, a * r.u2 - b * r.u1, e};
}

}  // namespace

double kamiltonian(const RegState& r, const ModelParams& p) {
  const auto [s, l, e] = k_terms(r);
  return 0.5 * (r.u1 * r.u1 + r.u2 * r.u2) + 2 * s * l - p.mu * (r.u1 * r.v2 + r.u2 * r.v1) -
         0.5 * (1 - p.mu) - p.mu * s / std::sqrt(e) + p.c * s;
}

double kamiltonian_scale(const RegState& r, const ModelParams& p) {
  const auto [s, l, e] = k_terms(r);
  return 0.5 * (r.u1 * r.u1 + r.u2 * r.u2) + std::abs(2 * s * l) +
         std::abs(p.mu * (r.u1 * r.v2 + r.u2 * r.v1)) + 0.5 * (1 - p.mu) + p.mu * s / std::sqrt(e) +
         std::abs(p.c * s);
}

Vec4 kamiltonian_gradient(const RegState& r, const ModelParams& p) {
  const auto [s, l, e] = k_terms(r);
  const double a = r.v1, b = r.v2, u1 = r.u1, u2 = r.u2, mu = p.mu;
  const double ea = 16 * a * s - 8 * a, eb = 16 * b * s + 8 * b;
  const double ri = 1.0 / std::sqrt(e), r3 = ri / e;
  const double ga = 2 * a * ri - 0.5 * s * r3 * ea;
  const double gb = 2 * b * ri - 0.5 * s * r3 * eb;
  return {4 * a * l + 2 * s * u2 - mu * u2 - mu * ga + 2 * p.c * a,
          4 * b * l - 2 * s * u1 - mu * u1 - mu * gb + 2 * p.c * b,
          u1 - 2 * s * b - mu * b,
          u2 + 2 * s * a - mu * a};
}

Mat4 kamiltonian_hessian(const RegState& r, const ModelParams& p) {
  const auto [s, l, e] = k_terms(r);
  const double a = r.v1, b = r.v2, u1 = r.u1, u2 = r.u2, mu = p.mu;
  const double ea = 16 * a * s - 8 * a, eb = 16 * b * s + 8 * b;
  const double eaa = 16 * s + 32 * a * a - 8, ebb = 16 * s + 32 * b * b + 8, eab = 32 * a * b;
  const double ri = 1.0 / std::sqrt(e), r3 = ri / e, r5 = r3 / e;
  const double sa = 2 * a, sb = 2 * b;
  auto gij = [&](double sij, double si, double sj, double ei, double ej, double eij) {
    return sij * ri - 0.5 * r3 * (si * ej + sj * ei) + 0.75 * s * r5 * ei * ej - 0.5 * s * r3 * eij;
  };
  const double gaa = gij(2, sa, sa, ea, ea, eaa);
  const double gbb = gij(2, sb, sb, eb, eb, ebb);
  const double gab = gij(0, sa, sb, ea, eb, eab);

  Mat4 h = Mat4::Zero();
  h(0, 0) = 4 * l + 8 * a * u2 - mu * gaa + 2 * p.c;
  h(1, 1) = 4 * l - 8 * b * u1 - mu * gbb + 2 * p.c;
  h(0, 1) = h(1, 0) = -4 * a * u1 + 4 * b * u2 - mu * gab;
  h(0, 2) = h(2, 0) = -4 * a * b;
  h(0, 3) = h(3, 0) = 4 * a * a + 2 * s - mu;
  h(1, 2) = h(2, 1) = -4 * b * b - 2 * s - mu;
  h(1, 3) = h(3, 1) = 4 * a * b;
  h(2, 2) = h(3, 3) = 1.0;
  return h;
}

RegularizedHamiltonian::RegularizedHamiltonian(const ModelParams& p) : p_(p) { p_.validate(); }

HypersurfaceSample sample_hypersurface(const ModelParams& params, std::size_t n,
                                       std::uint64_t seed, std::size_t adversarial) {
  params.validate();
  const double h1 = lagrange_points(params.mu).points[0].value;
  if (!(-params.c < h1))
    throw DomainError("sample_hypersurface: energy -c is not below the first critical value");
  const RegularizedHamiltonian k(params);

  HypersurfaceSample out;
  out.params = params;
  const Vec4 origin = Vec4::Zero();
  auto shoot = [&](const Vec4& d) -> std::optional<Vec4> {
    // Radius of the dominant quadratic part |u|^2/2 + c|v|^2 = (1-mu)/2.
    const double dv = d.head<2>().squaredNorm(), du = d.tail<2>().squaredNorm();
    const double th = std::sqrt((1 - params.mu) / (du + 2 * std::max(params.c, 0.1) * dv));
    const auto t = shoot_ray(k, origin, d, 0.0, th / 50, 40 * th);
    if (!t) return std::nullopt;
    const Vec4 x = *t * d;
    if (!(std::abs(k.value(x)) < 1e-10)) return std::nullopt;
    return x;
  };
  auto add_pair = [&](const Vec4& x) {
    for (const Vec4& y : {x, Vec4(-x)}) {
      out.points.push_back(RegState::from(y));
      out.residuals.push_back(k.value(y));
    }
  };

  const std::size_t rays = (n + 1) / 2;
  const std::size_t adv_rays = (adversarial + 1) / 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto fill = [&](std::size_t count, auto make_dir) {
    for (std::size_t i = 0; i < count; ++i) {
      bool ok = false;
      for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
        if (auto x = shoot(make_dir())) {
          add_pair(*x);
          ok = true;
        }
      }
      if (!ok) throw NumericalError("sample_hypersurface: repeated ray misses of the level set");
    }
  };
  fill(rays, [&] {
    Vec4 d(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    return Vec4(d.normalized());
  });
  // Directions almost inside the u-plane hit the level set next to the
  // collision circle {v = 0, |u|^2 = 1 - mu}.
  fill(adv_rays, [&] {
    const double eps = std::pow(10.0, -6.0 + 4.0 * unif(rng));
    Vec2 dv(gauss(rng), gauss(rng)), du(gauss(rng), gauss(rng));
    Vec4 d;
    d << eps * dv.normalized(), du.normalized();
    return Vec4(d.normalized());
  });

  // Connectivity of the nearest-neighbour graph at three times the largest
  // nearest-neighbour distance.
  const std::size_t m = out.points.size();
  std::vector<Vec4> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = out.points[i].vec();
  double max_nn = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double nn = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) nn = std::min(nn, (x[i] - x[j]).squaredNorm());
    max_nn = std::max(max_nn, nn);
  }
  const double link2 = 9.0 * max_nn;
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::size_t groups = m;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if ((x[i] - x[j]).squaredNorm() <= link2) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) {
          parent[a] = b;
          --groups;
        }
      }
  out.connected = groups <= 1;
  return out;
}

ConvexityResult convexity_check(const ModelParams& params, const HypersurfaceSample& sample) {
  if (sample.points.empty()) throw DomainError("convexity_check: empty sample");
  const RegularizedHamiltonian k(params);
  std::vector<Vec4> pts;
  pts.reserve(sample.points.size());
  for (const auto& r : sample.points) pts.push_back(r.vec());
  return convexity_check(k, pts);
}

void write_csv(std::ostream& os, const HypersurfaceSample& sample) {
  os << "v1,v2,u1,u2,K_residual\n";
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    const auto& r = sample.points[i];
    fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.v1, r.v2, r.u1, r.u2,
               sample.residuals[i]);
  }
}

}  // namespace rp3
