#pragma once

// Seeded generators and independent oracles shared by the unit suites and
// the acceptance binary. Nothing here calls into the code under test except
// through the public types.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "rp3/finsler.hpp"
#include "rp3/hamiltonian.hpp"
#include "rp3/index.hpp"
#include "rp3/types.hpp"

namespace rp3::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec4 random_vec4(Rng& rng, double scale = 1.0) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale),
          uniform(rng, -scale, scale)};
}

inline Vec4 random_unit4(Rng& rng) {
  std::normal_distribution<double> n;
  Vec4 v(n(rng), n(rng), n(rng), n(rng));
  return v / v.norm();
}

inline Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// Random element of SL(2, R) as rotation * shear * diagonal; every element of
// SL(2, R) is homotopic to a rotation, and with |log scale| small and the
// shear bounded this one stays in the identity component of the conjugators
// we need (the group is connected).
inline Mat2 random_sl2(Rng& rng) {
  const double s = std::exp(uniform(rng, -0.7, 0.7));
  Mat2 d;
  d << s, 0, 0, 1 / s;
  Mat2 sh;
  sh << 1, uniform(rng, -1.5, 1.5), 0, 1;
  return rotation(uniform(rng, 0, 2 * std::numbers::pi)) * sh * d;
}

// Loop of symmetric 2x2 matrices with a few harmonics and a random constant
// shift; the shift spreads the Conley-Zehnder indices over several values.
struct SymmetricLoop {
  static constexpr int harmonics = 3;
  std::array<std::array<double, 6>, harmonics> coef{};

  SymmetricLoop(Rng& rng, double amplitude, double shift) {
    for (int h = 0; h < harmonics; ++h)
      for (auto& x : coef[h]) x = uniform(rng, -1, 1) * (h == 0 ? amplitude : 0.5 * amplitude);
    // A common shift of the diagonal adds rotation without hyperbolic growth,
    // keeping det phi = 1 resolvable to tol_symp.
    const double c = uniform(rng, -shift, shift);
    coef[0][0] += c;
    coef[0][2] += c;
  }

  Mat2 operator()(double t) const {
    double e[3] = {0, 0, 0};
    for (int h = 0; h < harmonics; ++h) {
      const double c = std::cos(2 * std::numbers::pi * h * t), s = std::sin(2 * std::numbers::pi * h * t);
      for (int q = 0; q < 3; ++q) e[q] += coef[h][q] * c + coef[h][q + 3] * s;
    }
    Mat2 m;
    m << e[0], e[1], e[1], e[2];
    return m;
  }

  std::vector<Mat2> sampled(std::size_t m) const {
    std::vector<Mat2> out(m);
    for (std::size_t l = 0; l < m; ++l) out[l] = (*this)(double(l) / double(m));
    return out;
  }
};

// Brute-force rotation interval: turning of phi(t) v for n equally spaced
// directions v, each tracked by accumulating principal angle increments, then
// a golden-section polish of the best direction within one grid cell.
inline double dense_turning(const SymplecticPath& path, double a) {
  const Vec2 v(std::cos(a), std::sin(a));
  double total = 0;
  Vec2 prev = v;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 cur = path[i] * v;
    total += std::atan2(prev.x() * cur.y() - prev.y() * cur.x(), prev.dot(cur));
    prev = cur;
  }
  return total / (2 * std::numbers::pi);
}

inline RotationInterval dense_rotation_interval(const SymplecticPath& path, int n) {
  const double h = std::numbers::pi / n;
  double a_lo = 0, a_hi = 0;
  RotationInterval j{1e300, -1e300};
  for (int d = 0; d < n; ++d) {
    const double total = dense_turning(path, h * d);
    if (total < j.lo) j.lo = total, a_lo = h * d;
    if (total > j.hi) j.hi = total, a_hi = h * d;
  }
  auto polish = [&](double a, double sign) {
    const double g = 0.5 * (std::sqrt(5.0) - 1);
    double l = a - h, r = a + h;
    for (int it = 0; it < 60; ++it) {
      const double m1 = r - g * (r - l), m2 = l + g * (r - l);
      if (sign * dense_turning(path, m1) < sign * dense_turning(path, m2)) l = m1; else r = m2;
    }
    return dense_turning(path, 0.5 * (l + r));
  };
  j.lo = std::min(j.lo, polish(a_lo, -1));
  j.hi = std::max(j.hi, polish(a_hi, 1));
  return j;
}

// Classical RK4 on theta' = K cos^2 theta + sin^2 theta with steps aligned
// to the knots of the profile, m steps per knot interval.
inline double rk4_rotation(const CurvatureProfile& p, double theta0, int m) {
  auto f = [&](double t, double th) {
    const double c = std::cos(th), s = std::sin(th);
    return p(t) * c * c + s * s;
  };
  double th = theta0;
  for (std::size_t i = 0; i + 1 < p.t.size(); ++i) {
    const double h = (p.t[i + 1] - p.t[i]) / m;
    for (int k = 0; k < m; ++k) {
      // Sample K strictly inside the interval so the knot value on the far
      // side of a kink never leaks into this piece.
      const double t = p.t[i] + k * h;
      const double te = (k + 1 == m) ? p.t[i + 1] : t + h;
      const double k1 = f(t, th);
      const double k2 = f(t + h / 2, th + h / 2 * k1);
      const double k3 = f(t + h / 2, th + h / 2 * k2);
      const double k4 = f(te, th + h * k3);
      th += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  return th - theta0;
}

// Richardson-extrapolated RK4 reference: (16 A(2m) - A(m)) / 15.
inline double reference_rotation(const CurvatureProfile& p, double theta0, int m = 400) {
  const double a = rk4_rotation(p, theta0, m);
  const double b = rk4_rotation(p, theta0, 2 * m);
  return (16 * b - a) / 15;
}

inline CurvatureProfile random_profile(Rng& rng, double k_lo, double k_hi, double length, int knots) {
  CurvatureProfile p;
  for (int i = 0; i <= knots; ++i) {
    p.t.push_back(length * i / knots);
    p.k.push_back(uniform(rng, k_lo, k_hi));
  }
  return p;
}

// Central finite-difference gradient.
inline Vec4 fd_gradient(const std::function<double(const Vec4&)>& f, const Vec4& x, double h = 1e-6) {
  Vec4 g;
  for (int i = 0; i < 4; ++i) {
    Vec4 a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

// Relative difference with a floor on the scale.
inline double rel_diff(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double rel_diff(const Vec4& a, const Vec4& b, double floor = 1e-300) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

// f * H for a positive weight f; on {H = 0} its flow is a time change of the
// flow of H.
class WeightedHamiltonian final : public Hamiltonian {
 public:
  WeightedHamiltonian(const Hamiltonian& h, double a) : h_(h), a_(a) {}
  double value(const Vec4& x) const override { return weight(x) * h_.value(x); }
  Vec4 gradient(const Vec4& x) const override {
    return weight(x) * h_.gradient(x) + h_.value(x) * weight_gradient(x);
  }
  Mat4 hessian(const Vec4& x) const override {
    const Vec4 gw = weight_gradient(x), gh = h_.gradient(x);
    Mat4 hw = Mat4::Zero();
    hw(0, 0) = 2 * a_;
    return weight(x) * h_.hessian(x) + gw * gh.transpose() + gh * gw.transpose() + h_.value(x) * hw;
  }

 private:
  double weight(const Vec4& x) const { return 1 + a_ * x[0] * x[0]; }
  Vec4 weight_gradient(const Vec4& x) const { return {2 * a_ * x[0], 0, 0, 0}; }
  const Hamiltonian& h_;
  double a_;
};

// Signed crossing count of two closed polylines seen along direction d,
// counting only the crossings where a passes over b. Positive crossings are
// right-handed.
inline int crossing_linking_number(const std::vector<Vec3>& a, const std::vector<Vec3>& b, const Vec3& d) {
  const Vec3 n = d.normalized();
  Vec3 e1 = n.unitOrthogonal();
  Vec3 e2 = n.cross(e1);
  auto p2 = [&](const Vec3& x) { return Vec2(x.dot(e1), x.dot(e2)); };
  auto cross2 = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  int total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3& a0 = a[i];
    const Vec3& a1 = a[(i + 1) % a.size()];
    for (std::size_t k = 0; k < b.size(); ++k) {
      const Vec3& b0 = b[k];
      const Vec3& b1 = b[(k + 1) % b.size()];
      const Vec2 p = p2(a0), r = p2(a1) - p2(a0);
      const Vec2 q = p2(b0), s = p2(b1) - p2(b0);
      const double den = cross2(r, s);
      if (den == 0) continue;
      const double t = cross2(q - p, s) / den;
      const double u = cross2(q - p, r) / den;
      if (t < 0 || t >= 1 || u < 0 || u >= 1) continue;
      const double ha = (a0 + t * (a1 - a0)).dot(n);
      const double hb = (b0 + u * (b1 - b0)).dot(n);
      if (ha <= hb) continue;  // a is under b
      // Viewed from +n, the crossing is positive when the under strand s is
      // obtained from the over strand r by a counterclockwise turn.
      total += den > 0 ? 1 : -1;
    }
  }
  return total;
}

}  // namespace rp3::test
