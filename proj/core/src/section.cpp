#include "rp3/section.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

#include "rp3/errors.hpp"
#include "rp3/geom.hpp"

namespace rp3 {

namespace {

using Complex = std::complex<double>;
constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2 * std::numbers::pi;

double wrap(double a) { return std::remainder(a, two_pi); }

// Sum over |m| < K of c[m + K] e^{i m phi}.
Complex fourier_eval(const std::vector<Complex>& c, double phi) {
  const int k = int(c.size()) / 2;
  const Complex e(std::cos(phi), std::sin(phi));
  Complex sum = c[k];
  Complex p = 1.0;
  for (int m = 1; m < k; ++m) {
    p *= e;
    sum += c[k + m] * p + c[k - m] * std::conj(p);
  }
  return sum;
}

}  // namespace

SectionDef::Complex SectionDef::boundary_b(double phi) const { return fourier_eval(hc_, phi); }

double SectionDef::boundary_radius(double phi) const { return fourier_eval(rc_, phi).real(); }

SectionDef::Complex SectionDef::defining(const Vec4& x) const {
  const Complex a = mode_a(x), b = mode_b(x);
  const double r = std::abs(a);
  if (r == 0) return b;
  const double phi = std::arg(a);
  return b - boundary_b(phi) * (r / boundary_radius(phi));
}

Vec4 SectionDef::boundary_point(double phi) const {
  const Complex a = std::polar(boundary_radius(phi), phi);
  const Complex b = boundary_b(phi);
  return from_modes_ * Vec4(a.real(), a.imag(), b.real(), b.imag());
}

Vec2 SectionDef::coords(const Vec4& x) const {
  const Complex a = mode_a(x);
  return {a.real(), a.imag()};
}

double SectionDef::interior_depth(const Vec2& a) const {
  const double r = a.norm();
  if (r == 0) return 1.0;
  return 1.0 - r / boundary_radius(std::atan2(a[1], a[0]));
}

Vec4 SectionDef::lift(const Vec2& a, double theta) const {
  if (!(interior_depth(a) > 0)) throw DomainError("section: coordinates outside the page");
  const double r = a.norm();
  Complex b0 = 0;
  if (r > 0) {
    const double phi = std::atan2(a[1], a[0]);
    b0 = boundary_b(phi) * (r / boundary_radius(phi));
  }
  const Vec4 base = from_modes_ * Vec4(a[0], a[1], b0.real(), b0.imag());
  const Vec4 dir = from_modes_ * Vec4(0, 0, std::cos(theta), std::sin(theta));
  const double dn = dir.norm();
  const auto t = shoot_ray(*h_, base, dir, level_, 0.02 * scale_ / dn, 50 * scale_ / dn);
  if (!t) throw NumericalError("section: page ray does not meet the level");
  return base + *t * dir;
}

double SectionDef::angular_rate(const Vec4& x) const {
  const Vec4 f = h_->vector_field(x);
  const double eps = 1e-6 * scale_ / f.norm();
  return wrap(page_of(x + eps * f) - page_of(x - eps * f)) / (2 * eps);
}

double SectionDef::transversality(const Vec4& x) const {
  const Vec4 f = h_->vector_field(x);
  const Vec4 g = h_->gradient(x);
  const double eps = 1e-7 * scale_;
  Vec4 grad;
  for (int k = 0; k < 4; ++k) {
    const Vec4 e = eps * Vec4::Unit(k);
    grad[k] = wrap(page_of(x + e) - page_of(x - e)) / (2 * eps);
  }
  const Vec4 n = grad - (grad.dot(g) / g.squaredNorm()) * g;
  return f.dot(n) / (f.norm() * n.norm());
}

namespace {

struct Modes {
  Eigen::Vector4cd eta1, eta2;
};

// Complex functionals with d/dt eta^T x = i omega eta^T x for the
// linearization at the origin (positive definite Hessian required).
Modes normal_modes(const Mat4& q) {
  const Eigen::SelfAdjointEigenSolver<Mat4> pd(q);
  if (!(pd.eigenvalues().minCoeff() > 0))
    throw DomainError("build_section: Hessian at the origin is not positive definite");
  const Mat4 m = (j4() * q).transpose();
  const Eigen::EigenSolver<Mat4> es(m);
  std::vector<double> om;
  for (int k = 0; k < 4; ++k)
    if (es.eigenvalues()[k].imag() > 0) om.push_back(es.eigenvalues()[k].imag());
  if (om.size() != 2) throw DomainError("build_section: linearization at the origin is not elliptic");
  std::sort(om.begin(), om.end());
  const Eigen::Matrix4cd mc = m.cast<Complex>();
  auto kernel = [&](double w, int dim) {
    Eigen::FullPivLU<Eigen::Matrix4cd> lu(mc - Complex(0, w) * Eigen::Matrix4cd::Identity());
    lu.setThreshold(1e-8);
    const Eigen::MatrixXcd k = lu.kernel();
    if (k.cols() != dim) throw NumericalError("build_section: could not isolate the normal modes");
    return k;
  };
  Modes out;
  if (om[1] - om[0] <= 1e-6 * om[1]) {
    const Eigen::MatrixXcd k = kernel(0.5 * (om[0] + om[1]), 2);
    out.eta1 = k.col(0);
    out.eta2 = k.col(1);
  } else {
    out.eta1 = kernel(om[0], 1).col(0);
    out.eta2 = kernel(om[1], 1).col(0);
  }
  out.eta1.normalize();
  out.eta2 -= out.eta1.dot(out.eta2) * out.eta1;
  out.eta2.normalize();
  return out;
}

Complex mode_value(const Eigen::Vector4cd& eta, const Vec4& x) { return eta.cwiseProduct(x.cast<Complex>()).sum(); }

}  // namespace

SectionDef build_section(std::shared_ptr<const Hamiltonian> h, const ClosedOrbit& boundary, double page_angle,
                         int grid, double min_margin) {
  if (!h) throw DomainError("build_section: no Hamiltonian");
  if (!boundary.antipodal || boundary.samples.size() < 17)
    throw DomainError("build_section: boundary must be an antipodally symmetric lifted orbit");
  SectionDef s;
  s.h_ = h;
  s.boundary_ = boundary;
  s.theta0_ = page_angle;
  s.level_ = h->value(boundary.initial());
  s.scale_ = 0;
  for (const auto& x : boundary.samples) s.scale_ = std::max(s.scale_, x.norm());

  // Binding mode: the combination of the two modes that carries the orbit.
  const Modes md = normal_modes(h->hessian(Vec4::Zero()));
  Eigen::Matrix2cd gram = Eigen::Matrix2cd::Zero();
  for (const auto& x : boundary.samples) {
    const Eigen::Vector2cd a(mode_value(md.eta1, x), mode_value(md.eta2, x));
    gram += a * a.adjoint();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ge(gram);
  const Eigen::Vector2cd u = ge.eigenvectors().col(1);
  s.eta_a_ = std::conj(u[0]) * md.eta1 + std::conj(u[1]) * md.eta2;
  s.eta_b_ = -u[1] * md.eta1 + u[0] * md.eta2;
  Mat4 rows;
  rows.row(0) = s.eta_a_.real().transpose();
  rows.row(1) = s.eta_a_.imag().transpose();
  rows.row(2) = s.eta_b_.real().transpose();
  rows.row(3) = s.eta_b_.imag().transpose();
  const Eigen::FullPivLU<Mat4> lu(rows);
  if (!lu.isInvertible()) throw NumericalError("build_section: mode coordinates are singular");
  s.from_modes_ = lu.inverse();

  // arg A must increase monotonically once around the lifted orbit.
  const Trajectory traj = integrate(*h, boundary.initial(), 0.0, boundary.period,
                                    IntegratorOptions{1e-13, 1e-13, 0, 0, 5'000'000});
  const std::size_t fine = 8192;
  std::vector<double> tf(fine + 1), phf(fine + 1);
  double acc = std::arg(mode_value(s.eta_a_, boundary.initial()));
  double prev = acc;
  for (std::size_t i = 0; i <= fine; ++i) {
    tf[i] = boundary.period * double(i) / double(fine);
    const double a = std::arg(mode_value(s.eta_a_, traj(tf[i])));
    if (i > 0) {
      const double d = wrap(a - prev);
      if (!(d > 0)) throw DomainError("build_section: binding-mode angle is not monotone along the orbit");
      acc += d;
    }
    prev = a;
    phf[i] = acc;
  }
  if (std::abs(phf.back() - phf.front() - two_pi) > 1e-6)
    throw DomainError("build_section: binding-mode angle does not wind once around the orbit");

  // Resample at uniform phi and take Fourier coefficients.
  for (int m_count = 128;; m_count *= 2) {
    std::vector<Complex> bs(m_count), rs(m_count);
    std::vector<double> phis(m_count);
    std::size_t j = 0;
    for (int k = 0; k < m_count; ++k) {
      const double target = phf.front() + two_pi * k / m_count;
      while (j + 1 < fine && phf[j + 1] < target) ++j;
      auto g = [&](double t) {
        return phf[j] + wrap(std::arg(mode_value(s.eta_a_, traj(t))) - std::arg(mode_value(s.eta_a_, traj(tf[j])))) - target;
      };
      double t = tf[j];
      if (k > 0) {
        std::uintmax_t it = 100;
        auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)); };
        const auto [lo, hi] = boost::math::tools::toms748_solve(g, tf[j], tf[j + 1], tol, it);
        t = 0.5 * (lo + hi);
      }
      const Vec4 x = traj(t);
      phis[k] = std::arg(mode_value(s.eta_a_, x));
      bs[k] = mode_value(s.eta_b_, x);
      rs[k] = std::abs(mode_value(s.eta_a_, x));
    }
    const int kk = m_count / 2;
    s.hc_.assign(2 * kk, 0.0);
    s.rc_.assign(2 * kk, 0.0);
    double tail = 0, head = 0;
    for (int m = -kk + 1; m < kk; ++m) {
      Complex cb = 0, cr = 0;
      for (int k = 0; k < m_count; ++k) {
        const Complex e = std::polar(1.0, -m * phis[k]);
        cb += bs[k] * e;
        cr += rs[k] * e;
      }
      cb /= double(m_count);
      cr /= double(m_count);
      // Antipodal symmetry: B is odd in phi -> phi + pi, R is even.
      if (std::abs(m) % 2 == 1) s.hc_[kk + m] = cb; else s.rc_[kk + m] = cr;
      const double mag = std::max(std::abs(cb), std::abs(cr));
      head = std::max(head, mag);
      if (std::abs(m) >= kk / 2) tail = std::max(tail, mag);
    }
    if (tail <= 1e-13 * head) break;
    if (m_count >= 2048) throw NumericalError("build_section: boundary Fourier series does not converge");
  }

  // Transversality on grids over four pages.
  double margin = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  const auto pts = section_grid(s, grid, 0.95);
  for (int p = 0; p < 4; ++p) {
    const double th = page_angle + p * pi / 4;
    for (const auto& a : pts) {
      margin = std::min(margin, s.transversality(s.lift(a, th)));
      ++count;
    }
  }
  s.margin_ = margin;
  s.margin_points_ = count;
  if (!(margin >= min_margin))
    throw NonTransverseError(fmt::format(
        "build_section: transversality margin {:.3g} below {:.3g}; try another page angle", margin, min_margin));
  return s;
}

SectionDef build_section(const ClosedOrbit& boundary, double page_angle) {
  if (!boundary.params || boundary.chart != Chart::levi_civita)
    throw DomainError("build_section: PCR3BP section needs a Levi-Civita orbit with parameters");
  return build_section(std::make_shared<RegularizedHamiltonian>(*boundary.params), boundary, page_angle);
}

std::vector<Vec2> section_grid(const SectionDef& s, int rings, double max_fraction) {
  if (rings < 1 || !(max_fraction > 0 && max_fraction < 1))
    throw DomainError("section_grid: need rings >= 1 and 0 < max_fraction < 1");
  std::vector<Vec2> out{Vec2::Zero()};
  for (int k = 1; k <= rings; ++k) {
    const double f = max_fraction * k / rings;
    for (int j = 0; j < 6 * k; ++j) {
      const double phi = two_pi * (j + 0.5 * (k % 2)) / (6 * k);
      const double r = f * s.boundary_radius(phi);
      out.emplace_back(r * std::cos(phi), r * std::sin(phi));
    }
  }
  return out;
}

std::vector<ReturnMapSample> return_sequence(const SectionDef& s, const Vec2& a, int count,
                                             const ReturnOptions& opt) {
  if (count < 1) throw DomainError("return_sequence: count must be positive");
  const double depth = s.interior_depth(a);
  if (!(depth >= opt.min_depth)) throw DomainError("return_map: point is too close to the binding orbit");
  const Vec4 x0 = s.lift(a);
  const Hamiltonian& h = s.hamiltonian();
  IntegratorOptions io = opt.integrator;
  const bool near = depth < 1e-2;
  if (near) io.h_max = s.boundary().period / 400;

  std::vector<ReturnMapSample> out;
  double acc = 0;
  double prev = s.page_of(x0);
  double t_last = 0;

  auto record = [&](double t, const Vec4& x) {
    const int m = int(out.size()) + 1;
    ReturnMapSample r;
    r.entry = a;
    r.entry_state = x0;
    r.exit_state = (m % 2 == 1) ? Vec4(-x) : x;
    r.exit = s.coords(r.exit_state);
    r.time = t - t_last;
    r.near_binding = near;
    t_last = t;
    out.push_back(r);
  };

  // Advances the unwrapped angle over [ta, tb], splitting when it turns fast.
  std::function<bool(const DenseStep<4>&, double, double, int)> advance =
      [&](const DenseStep<4>& st, double ta, double tb, int depth_left) -> bool {
    const double cur = s.page_of(st(tb));
    const double d = wrap(cur - prev);
    if (std::abs(d) > pi / 2) {
      if (depth_left == 0) throw NumericalError("return_map: section angle jumps within a step");
      const double mid = 0.5 * (ta + tb);
      return advance(st, ta, mid, depth_left - 1) && advance(st, mid, tb, depth_left - 1);
    }
    const double target = pi * double(out.size() + 1);
    if (acc + d >= target) {
      const double base = acc, pa = prev;
      auto g = [&](double t) { return base + wrap(s.page_of(st(t)) - pa) - target; };
      std::uintmax_t it = 200;
      auto tol = [&](double x, double y) { return std::abs(x - y) <= opt.time_tol; };
      const double ga = g(ta), gb = g(tb);
      double t = tb;
      if (ga < 0 && gb > 0) {
        const auto [lo, hi] = boost::math::tools::toms748_solve(g, ta, tb, ga, gb, tol, it);
        t = 0.5 * (lo + hi);
      } else if (ga >= 0) {
        t = ta;
      }
      record(t, st(t));
      if (int(out.size()) == count) return false;
    }
    acc += d;
    prev = cur;
    return true;
  };

  const auto end = dop853<4>(
      [&](double, const Vec4& x) { return h.vector_field(x); }, 0.0, x0, opt.t_max, io,
      [&](const DenseStep<4>& st) {
        const int sub = 4;
        for (int k = 0; k < sub; ++k) {
          const double ta = st.t0 + st.h * k / sub, tb = st.t0 + st.h * (k + 1) / sub;
          if (!advance(st, ta, tb, 12)) return false;
        }
        return true;
      });
  (void)end;
  if (int(out.size()) < count)
    throw NoReturnError(fmt::format("return_map: no return within t_max = {:g} from ({:.17g}, {:.17g})",
                                    opt.t_max, a[0], a[1]));
  return out;
}

ReturnMapSample return_map(const SectionDef& s, const Vec2& a, const ReturnOptions& opt) {
  return return_sequence(s, a, 1, opt).front();
}

void write_return_csv(std::ostream& os, const std::vector<ReturnMapSample>& samples) {
  os << "x1,x2,x1_next,x2_next,return_time\n";
  for (const auto& r : samples)
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.entry[0], r.entry[1], r.exit[0], r.exit[1],
                      r.time);
}

FixedPoint find_fixed_point(const SectionDef& s, int rings, const ReturnOptions& opt) {
  const auto seeds = section_grid(s, rings, 0.9);
  double scale = 0;
  for (int k = 0; k < 64; ++k) scale = std::max(scale, s.boundary_radius(two_pi * k / 64));

  struct Seed {
    Vec2 a;
    double res;
  };
  std::vector<Seed> ranked;
  for (const auto& a : seeds) {
    try {
      ranked.push_back({a, (return_map(s, a, opt).exit - a).norm()});
    } catch (const NumericalError&) {
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const Seed& x, const Seed& y) { return x.res < y.res; });

  auto g = [&](const Vec2& a, double* time) {
    const auto r = return_map(s, a, opt);
    if (time) *time = r.time;
    return Vec2(r.exit - a);
  };
  const double tol = 1e-12 * scale;
  for (std::size_t si = 0; si < std::min<std::size_t>(ranked.size(), 5); ++si) {
    Vec2 a = ranked[si].a;
    try {
      double t = 0;
      Vec2 ga = g(a, &t);
      int it = 0;
      for (; it < 30 && ga.norm() > tol; ++it) {
        const double d = 1e-6 * scale;
        Mat2 jac;
        for (int k = 0; k < 2; ++k) {
          const Vec2 e = d * Vec2::Unit(k);
          jac.col(k) = (g(a + e, nullptr) - g(a - e, nullptr)) / (2 * d);
        }
        const Vec2 step = jac.fullPivLu().solve(-ga);
        bool accepted = false;
        for (double lam = 1; lam > 1e-3 && !accepted; lam *= 0.5) {
          const Vec2 next = a + lam * step;
          if (s.interior_depth(next) < 1e-3) continue;
          double tn = 0;
          const Vec2 gn = g(next, &tn);
          if (gn.norm() < ga.norm()) {
            a = next;
            ga = gn;
            t = tn;
            accepted = true;
          }
        }
        if (!accepted) break;
      }
      if (ga.norm() > 1e-9 * scale) continue;
      FixedPoint fp;
      fp.coords = a;
      fp.map_residual = ga.norm();
      fp.newton_iterations = it;
      std::size_t n = s.boundary().samples.size() | 1;
      fp.orbit = make_closed_orbit(s.hamiltonian(), s.lift(a), 2 * t, true, n, opt.integrator);
      fp.orbit.params = s.boundary().params;
      fp.orbit.chart = s.boundary().chart;
      fp.orbit.shooting_residual = fp.map_residual;
      if (fp.orbit.closure_residual > 1e-8) continue;
      return fp;
    } catch (const NumericalError&) {
    } catch (const DomainError&) {
    }
  }
  throw FixedPointError("find_fixed_point: Newton on the return map did not converge from any seed");
}

namespace {

// Integral of the Liouville form over a closed curve sampled uniformly,
// with the tangent from the spectral derivative.
double loop_action(const std::vector<Vec4>& x) {
  const std::size_t n = x.size();
  Eigen::FFT<double> fft;
  std::vector<Vec4> dx(n, Vec4::Zero());
  for (int c = 0; c < 4; ++c) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = x[i][c];
    std::vector<Complex> spec;
    fft.fwd(spec, v);
    for (std::size_t k = 0; k < n; ++k) {
      const long m = (k <= n / 2) ? long(k) : long(k) - long(n);
      spec[k] *= (2 * k == n) ? Complex(0) : Complex(0, double(m));
    }
    std::vector<Complex> back;
    fft.inv(back, spec);
    for (std::size_t i = 0; i < n; ++i) dx[i][c] = back[i].real();
  }
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += liouville_form(to_c2(x[i]), to_c2(dx[i]));
  return sum * two_pi / double(n);
}

}  // namespace

AreaDefect area_defect(const SectionDef& s, double fraction, std::size_t n, const ReturnOptions& opt) {
  if (!(fraction > 0 && fraction < 1)) throw DomainError("area_defect: region must lie inside the page");
  if (n < 16 || n % 2 != 0) throw DomainError("area_defect: need an even number of boundary points >= 16");
  std::vector<Vec4> before(n), after(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = two_pi * double(i) / double(n);
    const double r = fraction * s.boundary_radius(phi);
    const auto ret = return_map(s, Vec2(r * std::cos(phi), r * std::sin(phi)), opt);
    before[i] = ret.entry_state;
    after[i] = ret.exit_state;
  }
  AreaDefect d;
  d.area = loop_action(before);
  d.image_area = loop_action(after);
  d.defect = std::abs(d.image_area - d.area) / std::abs(d.area);
  return d;
}

int verify_hopf_link(const ClosedOrbit& o1, const ClosedOrbit& o2) {
  auto loop = [](const ClosedOrbit& o) {
    const std::size_t n = o.samples.size() - 1;
    const std::size_t stride = std::max<std::size_t>(1, n / 1024);
    std::vector<Vec4> pts;
    for (std::size_t i = 0; i < n; i += stride) {
      const Vec4 z = to_c2(o.samples[i]);
      if (!(z.norm() > 0)) throw DomainError("verify_hopf_link: orbit passes through the origin");
      pts.push_back(z.normalized());
    }
    pts.push_back(pts.front());
    return SampledLoop::on_s3(std::move(pts));
  };
  return linking_number(loop(o1), loop(o2));
}

}  // namespace rp3
