#include "rp3/index.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "rp3/errors.hpp"
#include "rp3/integrator.hpp"

namespace rp3 {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// Real logarithm of an SL(2) matrix near the identity (the step matrix
// between consecutive samples).
Mat2 sl2_log(const Mat2& m) {
  const double tr = m.trace();
  const Mat2 id = Mat2::Identity();
  if (std::abs(tr - 2.0) < 1e-12) return m - id;
  if (tr > 2.0) {
    const double th = std::acosh(0.5 * tr);
    return th / std::sinh(th) * (m - std::cosh(th) * id);
  }
  if (tr > -2.0) {
    const double th = std::acos(0.5 * tr);
    return th / std::sin(th) * (m - std::cos(th) * id);
  }
  throw NumericalError("symplectic path is under-sampled: step matrix has no small logarithm");
}

Mat2 sl2_exp(const Mat2& x) {
  const double d = x.determinant();
  const Mat2 id = Mat2::Identity();
  if (std::abs(d) < 1e-14) return id + x + 0.5 * x * x;
  if (d > 0) {
    const double w = std::sqrt(d);
    return std::cos(w) * id + std::sin(w) / w * x;
  }
  const double w = std::sqrt(-d);
  return std::cosh(w) * id + std::sinh(w) / w * x;
}

double signed_angle(const Vec2& a, const Vec2& b) {
  return std::atan2(a[0] * b[1] - a[1] * b[0], a.dot(b));
}

// Angle swept by phi v between samples a and b; subdivides the step along
// the one-parameter subgroup a exp(s log(a^{-1} b)) when a single
// increment could hide a branch change.
double step_angle(const Mat2& a, const Mat2& b, const Vec2& v, int depth = 0) {
  const Vec2 wa = a * v, wb = b * v;
  const double d = signed_angle(wa, wb);
  if (std::abs(d) < 0.5 * std::numbers::pi) return d;
  if (depth > 24) throw NumericalError("rotation tracking: subdivision limit reached");
  const Mat2 x = sl2_log(a.inverse() * b);
  const Mat2 mid = a * sl2_exp(0.5 * x);
  return step_angle(a, mid, v, depth + 1) + step_angle(mid, b, v, depth + 1);
}

Vec2 real_eigenvector(const Mat2& m, double lambda) {
  const Vec2 a(m(0, 1), lambda - m(0, 0));
  const Vec2 b(lambda - m(1, 1), m(1, 0));
  const Vec2 v = a.norm() >= b.norm() ? a : b;
  if (v.norm() < 1e-300) return Vec2(1, 0);  // m is a multiple of the identity
  return v.normalized();
}

RotationNumber rotation_number_floquet(const SymplecticPath& path, const RotationInterval& j) {
  const FloquetData f = floquet(path.back());
  RotationNumber r;
  r.kind = f.kind;
  if (f.kind == FloquetKind::elliptic) {
    const double mid = 0.5 * (j.lo + j.hi);
    r.rho = f.turns_mod1 + std::round(mid - f.turns_mod1);
    if (!j.contains(r.rho, 1e-6))
      throw NumericalError("rotation_number: Floquet angle is inconsistent with the rotation interval");
    return r;
  }
  const double lambda = f.multipliers.first.real();
  r.rho = rotation_increment(path, real_eigenvector(path.back(), lambda));
  r.from_rotation = false;
  return r;
}

}  // namespace

SymplecticPath::SymplecticPath(std::vector<Mat2> samples, double span)
    : m_(std::move(samples)), span_(span) {
  if (m_.size() < 2) throw DomainError("SymplecticPath: need at least two samples");
  if (!(span_ > 0)) throw DomainError("SymplecticPath: span must be positive");
  if ((m_.front() - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("SymplecticPath: path does not start at the identity");
  m_.front().setIdentity();
  for (const auto& m : m_) {
    if (!m.allFinite()) throw DomainError("SymplecticPath: non-finite sample");
    if (!is_symplectic(m)) throw DomainError("SymplecticPath: sample is not symplectic");
  }
}

SymplecticPath SymplecticPath::iterate(int n) const {
  if (n < 1) throw DomainError("SymplecticPath::iterate: n must be >= 1");
  std::vector<Mat2> out;
  out.reserve(std::size_t(n) * (m_.size() - 1) + 1);
  Mat2 power = Mat2::Identity();
  for (int k = 0; k < n; ++k) {
    for (std::size_t i = 0; i + 1 < m_.size(); ++i) out.push_back(m_[i] * power);
    power = m_.back() * power;
  }
  out.push_back(power);
  // Products drift off SL(2) only at rounding level; renormalize the
  // determinant so long iterates stay within tol_symp.
  for (auto& m : out) m /= std::sqrt(m.determinant());
  return SymplecticPath(std::move(out), span_ * n);
}

SymplecticPath SymplecticPath::conjugated(const Mat2& c) const {
  const Mat2 ci = c.inverse();
  std::vector<Mat2> out;
  out.reserve(m_.size());
  for (const auto& m : m_) out.push_back(c * m * ci);
  return SymplecticPath(std::move(out), span_);
}

SymplecticPath path_from_generator(const std::function<Mat2(double)>& s, std::size_t samples) {
  auto rhs = [&](double t, const Vec4& y) {
    const Eigen::Map<const Mat2> phi(y.data());
    Vec4 out;
    Eigen::Map<Mat2>(out.data()) = j2() * s(t) * phi;
    return out;
  };
  Vec4 y0;
  Eigen::Map<Mat2>(y0.data()).setIdentity();
  IntegratorOptions opt;
  opt.rtol = opt.atol = 1e-13;
  const auto ys = dop853_uniform<4>(rhs, 0.0, y0, 1.0, samples, opt);
  std::vector<Mat2> m;
  m.reserve(ys.size());
  for (const auto& y : ys) m.push_back(Eigen::Map<const Mat2>(y.data()));
  return SymplecticPath(std::move(m));
}

SymplecticPath rotation_path(double turns, std::size_t samples) {
  std::vector<Mat2> m;
  m.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i)
    m.push_back(rotation(two_pi * turns * double(i) / double(samples - 1)));
  return SymplecticPath(std::move(m));
}

double rotation_increment(const SymplecticPath& path, const Vec2& v) {
  if (!(v.norm() > 0)) throw DomainError("rotation_increment: zero direction");
  double total = 0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) total += step_angle(path[i], path[i + 1], v);
  return total / two_pi;
}

RotationInterval rotation_interval(const SymplecticPath& path, int n_dirs) {
  if (n_dirs < 64) throw DomainError("rotation_interval: n_dirs must be >= 64");
  auto delta = [&](double a) { return rotation_increment(path, Vec2(std::cos(a), std::sin(a))); };
  const double da = std::numbers::pi / n_dirs;
  std::vector<double> vals(n_dirs);
  for (int k = 0; k < n_dirs; ++k) vals[k] = delta(k * da);
  const int kmin = int(std::min_element(vals.begin(), vals.end()) - vals.begin());
  const int kmax = int(std::max_element(vals.begin(), vals.end()) - vals.begin());

  // Delta(v) = Delta(-v), so the angle is pi-periodic and brackets may wrap.
  auto refine = [&](int k, double sign) {
    auto g = [&](double a) { return sign * delta(a); };
    const auto res = boost::math::tools::brent_find_minima(g, (k - 1) * da, (k + 1) * da, 40);
    return sign * res.second;
  };
  RotationInterval j;
  j.lo = std::min(vals[kmin], refine(kmin, 1.0));
  j.hi = std::max(vals[kmax], refine(kmax, -1.0));
  if (!(j.width() < 0.5))
    throw NumericalError("rotation_interval: width >= 1/2 signals an angle-tracking failure");
  return j;
}

CzDetail conley_zehnder_from_interval(const RotationInterval& j) {
  CzDetail d;
  d.interval = j;
  const double below = std::ceil(j.lo) - 1.0;
  const double above = std::floor(j.hi) + 1.0;
  const double gap = std::min(j.lo - below, above - j.hi);
  d.epsilon = std::min(1e-4, 0.5 * gap);
  const double a = j.lo - d.epsilon, b = j.hi - d.epsilon;
  const double k = std::ceil(a);
  d.index = k <= b ? int(2 * k) : int(2 * k - 1);
  auto near_int = [](double x) { return std::abs(x - std::round(x)) < 1e-8; };
  d.degenerate = near_int(j.lo) || near_int(j.hi);
  return d;
}

CzDetail conley_zehnder_detail(const SymplecticPath& path, int n_dirs) {
  return conley_zehnder_from_interval(rotation_interval(path, n_dirs));
}

const char* to_string(FloquetKind k) {
  switch (k) {
    case FloquetKind::elliptic: return "elliptic";
    case FloquetKind::hyperbolic: return "hyperbolic";
    case FloquetKind::parabolic_degenerate: return "parabolic-degenerate";
  }
  return "?";
}

FloquetData floquet(const Mat2& m) {
  const double tr = m.trace();
  FloquetData f{};
  if (std::abs(tr) < 2.0 - tol_parabolic) {
    f.kind = FloquetKind::elliptic;
    const double a0 = std::acos(0.5 * tr) / two_pi;
    f.turns_mod1 = m(1, 0) > 0 ? a0 : 1.0 - a0;
    f.multipliers = {std::polar(1.0, two_pi * f.turns_mod1), std::polar(1.0, -two_pi * f.turns_mod1)};
    return f;
  }
  f.kind = std::abs(std::abs(tr) - 2.0) <= tol_parabolic ? FloquetKind::parabolic_degenerate
                                                        : FloquetKind::hyperbolic;
  const double disc = 0.25 * tr * tr - 1.0;
  if (disc >= 0) {
    const double r = std::sqrt(disc);
    const double l1 = 0.5 * tr + (tr >= 0 ? r : -r);
    f.multipliers = {l1, 1.0 / l1};
  } else {
    // Within the parabolic band but slightly inside the unit circle.
    const double r = std::sqrt(-disc);
    f.multipliers = {{0.5 * tr, r}, {0.5 * tr, -r}};
  }
  f.turns_mod1 = tr > 0 ? 0.0 : 0.5;
  return f;
}

RotationNumber rotation_number(const SymplecticPath& path, int periods, const Vec2& v0) {
  if (periods == 1) return rotation_number_floquet(path, rotation_interval(path));
  if (periods < 20) throw DomainError("rotation_number: need one period (Floquet) or >= 20 periods");
  if ((path.size() - 1) % std::size_t(periods) != 0)
    throw DomainError("rotation_number: samples do not align with period boundaries");
  RotationNumber r;
  r.rho = rotation_increment(path, v0) / periods;
  r.kind = floquet(path[(path.size() - 1) / periods]).kind;
  r.from_rotation = r.kind == FloquetKind::elliptic;
  return r;
}

IterateIndex iterate_index(double rho, int n, FloquetKind kind, int mu1) {
  if (n < 1) throw DomainError("iterate_index: n must be >= 1");
  const double rn = n * rho;
  switch (kind) {
    case FloquetKind::hyperbolic:
      return {rn, n * mu1};
    case FloquetKind::elliptic:
      if (std::abs(rn - std::round(rn)) < 1e-9)
        throw DegeneracyError("iterate_index: degenerate elliptic iterate (n rho is an integer)");
      return {rn, 2 * int(std::floor(rn)) + 1};
    case FloquetKind::parabolic_degenerate:
      break;
  }
  throw DegeneracyError("iterate_index: parabolic monodromy has no iteration formula");
}

IndexReport index_report(const SymplecticPath& path) {
  IndexReport r;
  r.rotation_interval = rotation_interval(path);
  const CzDetail cz = conley_zehnder_from_interval(r.rotation_interval);
  r.mu_cz = cz.index;
  r.degenerate = cz.degenerate;
  const FloquetData f = floquet(path.back());
  r.floquet = f.kind;
  r.multipliers = f.multipliers;
  r.rho = rotation_number_floquet(path, r.rotation_interval).rho;
  return r;
}

}  // namespace rp3
