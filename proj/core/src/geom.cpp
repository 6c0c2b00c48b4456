#include "rp3/geom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rp3/errors.hpp"

namespace rp3 {

Vec4 quat_mul(const Vec4& a, const Vec4& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

double liouville_form(const Vec4& z, const Vec4& w) {
  return 0.5 * (z[0] * w[1] - z[1] * w[0] + z[2] * w[3] - z[3] * w[2]);
}

ContactFrame global_frame(const Vec4& z) {
  if (!z.allFinite() || std::abs(z.norm() - 1.0) > tol_unit)
    throw DomainError("global_frame: base point is not on the unit sphere");
  static const Vec4 qj(0, 0, 1, 0);
  static const Vec4 qk(0, 0, 0, 1);
  return {z, quat_mul(qj, z), quat_mul(qk, z)};
}

Vec2 project_to_contact(const Vec4& z, const Vec4& reeb, const Vec4& w) {
  const double r = z.norm();
  if (!(r > 0)) throw DomainError("project_to_contact: zero base point");
  const Vec4 zu = z / r;
  const double lx = liouville_form(zu, reeb);
  if (std::abs(lx) <= 1e-12 * std::max(1.0, reeb.norm()))
    throw DegeneracyError("project_to_contact: Reeb vector lies in the contact kernel");
  const ContactFrame f = global_frame(zu);
  const Vec4 rest = w - (liouville_form(zu, w) / lx) * reeb;
  return {rest.dot(f.e1), rest.dot(f.e2)};
}

Vec4 lift_from_contact(const Vec4& z, const Vec4& gradient, const Vec2& c) {
  const double r = z.norm();
  if (!(r > 0)) throw DomainError("lift_from_contact: zero base point");
  const Vec4 zu = z / r;
  const double gz = gradient.dot(zu);
  if (std::abs(gz) <= 1e-12 * gradient.norm())
    throw DegeneracyError("lift_from_contact: level set is not transverse to the radial field");
  const ContactFrame f = global_frame(zu);
  const Vec4 t = c[0] * f.e1 + c[1] * f.e2;
  return t - (gradient.dot(t) / gz) * zu;
}

namespace {

template <int N>
std::vector<Vec4> check_loop(const std::vector<Eigen::Matrix<double, N, 1>>& pts,
                             double closure_tol) {
  if (pts.size() < 16) throw DomainError("SampledLoop: fewer than 16 samples");
  for (const auto& p : pts)
    if (!p.allFinite()) throw DomainError("SampledLoop: non-finite sample");
  if ((pts.front() - pts.back()).norm() > closure_tol)
    throw DomainError("SampledLoop: loop is not closed");
  std::vector<Vec4> out;
  out.reserve(pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if ((pts[i + 1] - pts[i]).norm() == 0.0)
      throw DomainError("SampledLoop: repeated consecutive sample");
    Vec4 v = Vec4::Zero();
    v.template head<N>() = pts[i];
    out.push_back(v);
  }
  return out;
}

// Distance between segments [p0,p1] and [q0,q1] in any dimension.
double segment_distance(const Vec4& p0, const Vec4& p1, const Vec4& q0, const Vec4& q1) {
  const Vec4 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  const double c = d1.dot(r), b = d1.dot(d2);
  const double denom = a * e - b * b;
  double s = denom > 1e-300 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  double t = (b * s + f) / e;
  if (t < 0) {
    t = 0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1) {
    t = 1;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return (p0 + s * d1 - q0 - t * d2).norm();
}

double min_distance(const SampledLoop& a, const SampledLoop& b) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = a.size(), m = b.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      best = std::min(best, segment_distance(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m]));
  return best;
}

// Basis of the orthogonal complement of the pole, oriented so that the
// projection preserves the orientation of S^3 (outward normal first).
std::array<Vec4, 3> tangent_basis(const Vec4& pole) {
  Mat4 m;
  m.col(0) = pole;
  int filled = 1;
  for (int k = 0; k < 4 && filled < 4; ++k) {
    Vec4 e = Vec4::Unit(k);
    for (int c = 0; c < filled; ++c) e -= e.dot(m.col(c)) * m.col(c);
    if (e.norm() > 0.3) m.col(filled++) = e.normalized();
  }
  m.col(0) = -pole;
  if (m.determinant() < 0) m.col(3) = -m.col(3);
  return {Vec4(m.col(1)), Vec4(m.col(2)), Vec4(m.col(3))};
}

Vec4 choose_pole(const SampledLoop& a, const SampledLoop& b) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g;
  auto clearance = [&](const Vec4& p) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i) d = std::min(d, (a[i] - p).squaredNorm());
    for (std::size_t i = 0; i < b.size(); ++i) d = std::min(d, (b[i] - p).squaredNorm());
    return d;
  };
  Vec4 best = Vec4::Unit(0);
  double best_d = -1;
  auto consider = [&](const Vec4& p) {
    const double d = clearance(p);
    if (d > best_d) {
      best_d = d;
      best = p;
    }
  };
  for (int k = 0; k < 4; ++k) {
    consider(Vec4::Unit(k));
    consider(-Vec4::Unit(k));
  }
  for (int k = 0; k < 512; ++k) consider(Vec4(g(rng), g(rng), g(rng), g(rng)).normalized());
  // Local refinement around the best candidate.
  double step = 0.3;
  for (int k = 0; k < 256; ++k) {
    const Vec4 trial = (best + step * Vec4(g(rng), g(rng), g(rng), g(rng))).normalized();
    const double d = clearance(trial);
    if (d > best_d) {
      best_d = d;
      best = trial;
    } else if (k % 32 == 31) {
      step *= 0.5;
    }
  }
  return best;
}

}  // namespace

SampledLoop SampledLoop::in_r3(std::vector<Vec3> points, double closure_tol) {
  return SampledLoop(Ambient::R3, check_loop<3>(points, closure_tol));
}

SampledLoop SampledLoop::on_s3(std::vector<Vec4> points, double closure_tol) {
  for (const auto& p : points)
    if (std::abs(p.norm() - 1.0) > 1e-7)
      throw DomainError("SampledLoop: S^3 sample is not unit length");
  return SampledLoop(Ambient::S3, check_loop<4>(points, closure_tol));
}

Vec3 stereographic(const Vec4& x, const Vec4& pole) {
  const auto basis = tangent_basis(pole);
  const double den = 1.0 - x.dot(pole);
  if (den <= 1e-14) throw SingularityError("stereographic: point at the pole");
  return Vec3(x.dot(basis[0]), x.dot(basis[1]), x.dot(basis[2])) / den;
}

double gauss_linking_raw(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  const std::size_t n = a.size(), m = b.size();
  double total = 0;
  auto unit_cross = [](const Vec3& x, const Vec3& y, bool& ok) {
    Vec3 c = x.cross(y);
    const double nc = c.norm();
    ok = nc > 1e-300;
    return ok ? Vec3(c / nc) : c;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p1 = a[i];
    const Vec3& p2 = a[(i + 1) % n];
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3& p3 = b[j];
      const Vec3& p4 = b[(j + 1) % m];
      const Vec3 r13 = p3 - p1, r14 = p4 - p1, r23 = p3 - p2, r24 = p4 - p2;
      bool ok1, ok2, ok3, ok4;
      const Vec3 n1 = unit_cross(r13, r14, ok1);
      const Vec3 n2 = unit_cross(r14, r24, ok2);
      const Vec3 n3 = unit_cross(r24, r23, ok3);
      const Vec3 n4 = unit_cross(r23, r13, ok4);
      if (!(ok1 && ok2 && ok3 && ok4)) continue;  // coplanar pair: no contribution
      auto as = [](double x) { return std::asin(std::clamp(x, -1.0, 1.0)); };
      const double omega = as(n1.dot(n2)) + as(n2.dot(n3)) + as(n3.dot(n4)) + as(n4.dot(n1));
      const double sgn = (p4 - p3).cross(p2 - p1).dot(r13);
      if (sgn > 0)
        total += omega;
      else if (sgn < 0)
        total -= omega;
    }
  }
  return total / (4.0 * std::numbers::pi);
}

LinkingResult linking_integral(const SampledLoop& a, const SampledLoop& b) {
  if (a.ambient() != b.ambient()) throw DomainError("linking_number: loops live in different spaces");
  const double dmin = min_distance(a, b);
  if (dmin <= tol_link) throw DomainError("linking_number: loops are closer than tol_link");

  std::vector<Vec3> pa(a.size()), pb(b.size());
  if (a.ambient() == SampledLoop::Ambient::R3) {
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = a[i].head<3>();
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = b[i].head<3>();
  } else {
    const Vec4 pole = choose_pole(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = stereographic(a[i], pole);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = stereographic(b[i], pole);
  }
  const double raw = gauss_linking_raw(pa, pb);
  const double r = std::round(raw);
  if (!std::isfinite(raw) || std::abs(raw - r) > 0.1)
    throw NumericalError("linking_number: Gauss integral " + std::to_string(raw) +
                         " is not close to an integer");
  return {static_cast<int>(r), raw};
}

}  // namespace rp3
