#include "rp3/ellipsoid.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "rp3/errors.hpp"
#include "rp3/geom.hpp"

namespace rp3 {

void EllipsoidParams::validate() const {
  if (!(std::isfinite(r1) && std::isfinite(r2) && r1 > 0 && r1 < r2))
    throw DomainError("ellipsoid: need 0 < r1 < r2");
}

bool near_rational(double x, int max_den, double tol) {
  for (int q = 1; q <= max_den; ++q) {
    const double p = std::round(x * q);
    if (std::abs(x - p / q) <= tol) return true;
  }
  return false;
}

bool EllipsoidParams::near_rational() const { return rp3::near_rational(1.0 / ratio()); }

EllipsoidHamiltonian::EllipsoidHamiltonian(const EllipsoidParams& p) : p_(p) {
  p.validate();
  const double a = 2.0 / (p.r1 * p.r1), b = 2.0 / (p.r2 * p.r2);
  w_ = Vec4(a, b, a, b);
}

double EllipsoidHamiltonian::value(const Vec4& x) const {
  return 0.5 * x.cwiseProduct(x).dot(w_) - 1.0;
}

Vec4 EllipsoidHamiltonian::gradient(const Vec4& x) const { return w_.cwiseProduct(x); }

Mat4 EllipsoidHamiltonian::hessian(const Vec4&) const { return w_.asDiagonal(); }

Vec4 ellipsoid_flow(const Vec4& z, double t, const EllipsoidParams& p) {
  p.validate();
  const double k = (z[0] * z[0] + z[1] * z[1]) / (p.r1 * p.r1) + (z[2] * z[2] + z[3] * z[3]) / (p.r2 * p.r2);
  if (!z.allFinite() || std::abs(k - 1.0) > 1e-9) throw DomainError("ellipsoid_flow: point is not on the ellipsoid");
  const double a0 = 2 * t / (p.r1 * p.r1), a1 = 2 * t / (p.r2 * p.r2);
  const double c0 = std::cos(a0), s0 = std::sin(a0), c1 = std::cos(a1), s1 = std::sin(a1);
  return {c0 * z[0] - s0 * z[1], s0 * z[0] + c0 * z[1], c1 * z[2] - s1 * z[3], s1 * z[2] + c1 * z[3]};
}

LensAction::LensAction(int p, int q) : p_(p), q_(q) {
  if (p < 1 || q < 1 || std::gcd(p, q) != 1) throw DomainError("LensAction: need coprime positive p, q");
}

Vec4 LensAction::operator()(const Vec4& z) const {
  const double a0 = 2 * std::numbers::pi / p_, a1 = 2 * std::numbers::pi * q_ / p_;
  const double c0 = std::cos(a0), s0 = std::sin(a0), c1 = std::cos(a1), s1 = std::sin(a1);
  return {c0 * z[0] - s0 * z[1], s0 * z[0] + c0 * z[1], c1 * z[2] - s1 * z[3], s1 * z[2] + c1 * z[3]};
}

int LensAction::order() const {
  const Vec4 z = Vec4(0.3, -0.4, 0.5, 0.7).normalized();
  Vec4 w = z;
  for (int n = 1; n <= 4 * p_; ++n) {
    w = (*this)(w);
    if ((w - z).norm() < 1e-9) return n;
  }
  throw NumericalError("LensAction: no finite order found");
}

EllipsoidIndices ellipsoid_indices(const EllipsoidParams& p) {
  p.validate();
  if (p.near_rational())
    throw DegeneracyError("ellipsoid_indices: r2^2/r1^2 is within 1e-9 of a rational with denominator <= 50");
  const double x = 1.0 / p.ratio();
  const int k = static_cast<int>(std::floor(x)) + 1;
  return {3, 2 * k + 1, k};
}

double ellipsoid_period(Fiber f, const EllipsoidParams& p) {
  p.validate();
  const double r = f == Fiber::P1 ? p.r1 : p.r2;
  return 0.5 * std::numbers::pi * r * r;
}

SymplecticPath ellipsoid_transverse_path(Fiber f, const EllipsoidParams& p, std::size_t samples) {
  if (samples < 2) throw DomainError("ellipsoid_transverse_path: need at least two samples");
  const double period = ellipsoid_period(f, p);
  const double rate = 2.0 / (p.r1 * p.r1) + 2.0 / (p.r2 * p.r2);
  std::vector<Mat2> m(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double th = rate * period * double(i) / double(samples - 1);
    m[i] << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  }
  return SymplecticPath(std::move(m), period);
}

ClosedOrbit ellipsoid_fiber(Fiber f, const EllipsoidParams& p, std::size_t samples) {
  p.validate();
  if (samples < 17 || samples % 2 == 0) throw DomainError("ellipsoid_fiber: need an odd count >= 17");
  const Vec4 z0 = f == Fiber::P1 ? Vec4(p.r1, 0, 0, 0) : Vec4(0, 0, p.r2, 0);
  const double period = 2 * ellipsoid_period(f, p);
  const EllipsoidHamiltonian h(p);
  ClosedOrbit o;
  o.chart = Chart::ellipsoid;
  o.period = period;
  o.antipodal = true;
  o.times.resize(samples);
  o.samples.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    o.times[i] = period * double(i) / double(samples - 1);
    o.samples[i] = from_c2(ellipsoid_flow(z0, o.times[i], p));
  }
  o.samples.back() = o.samples.front();
  o.energy = 0;
  for (const auto& x : o.samples) o.energy_residual = std::max(o.energy_residual, std::abs(h.value(x)));
  return o;
}

}  // namespace rp3
