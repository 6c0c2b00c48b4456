#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rp3/ellipsoid.hpp"
#include "rp3/errors.hpp"
#include "rp3/geom.hpp"
#include "rp3/section.hpp"
#include "support.hpp"

using namespace rp3;
using rp3::test::Rng;

// Ellipsoid pages bounded by P1. Along the flow z0 turns at 2/r1^2 and z1 at
// 2/r2^2. The boundary has z1 = 0, so F reduces to the z1 mode and a page is
// a fixed phase of z1, with section coordinate A given by z0. On the
// quotient the page comes back when arg z1 has advanced by pi, after
// t = pi r2^2 / 2. Over that time z0 turns by pi r2^2 / r1^2 and the
// antipodal identification adds pi, so the return map is the rotation by
// pi (1 + r2^2 / r1^2) with return time pi r2^2 / 2.

namespace {

constexpr double pi = std::numbers::pi;

struct EllipsoidCase {
  EllipsoidParams p{1.0, 1.5};
  std::shared_ptr<EllipsoidHamiltonian> h = std::make_shared<EllipsoidHamiltonian>(p);
  ClosedOrbit p1 = ellipsoid_fiber(Fiber::P1, p);
  ClosedOrbit p2 = ellipsoid_fiber(Fiber::P2, p);
  SectionDef s = build_section(h, p1, 0.0);
};

const EllipsoidCase& ellipsoid_case() {
  static const EllipsoidCase c;
  return c;
}

struct PcrCase {
  ClosedOrbit binding = find_retrograde({0.99, 2.0});
  SectionDef s = build_section(binding, 0.0);
  FixedPoint fp = find_fixed_point(s);
};

const PcrCase& pcr_case() {
  static const PcrCase c;
  return c;
}

Vec2 random_interior(Rng& rng, const SectionDef& s, double max_fraction) {
  const double phi = test::uniform(rng, -pi, pi);
  const double f = max_fraction * std::sqrt(test::uniform(rng, 0, 1));
  return f * s.boundary_radius(phi) * Vec2(std::cos(phi), std::sin(phi));
}

double wrap(double a) { return std::remainder(a, 2 * pi); }

std::vector<Vec4> unit_loop(const ClosedOrbit& o) {
  std::vector<Vec4> pts;
  for (const Vec4& x : o.samples) pts.push_back(to_c2(x).normalized());
  pts.back() = pts.front();
  return pts;
}

}  // namespace

TEST_CASE("ellipsoid section is transverse with positive margin") {
  const SectionDef& s = ellipsoid_case().s;
  CHECK(s.margin() > 0);
  CHECK(s.margin_points() > 0);
  Rng rng(81);
  for (int n = 0; n < 500; ++n) {
    const Vec2 a = random_interior(rng, s, 0.95);
    const Vec4 x = s.lift(a);
    CHECK(std::abs(s.hamiltonian().value(x) - s.level()) < 1e-10);
    CHECK(std::abs(wrap(s.page_of(x) - s.page_angle())) < 1e-9);
    CHECK(s.transversality(x) > 0);
    CHECK(s.angular_rate(x) > 0);
    CHECK((s.coords(x) - a).norm() < 1e-9);
  }
}

TEST_CASE("section boundary reproduces the binding orbit") {
  for (const SectionDef* s : {&ellipsoid_case().s, &pcr_case().s}) {
    const ClosedOrbit& o = s->boundary();
    double worst = 0;
    for (std::size_t i = 0; i < o.samples.size(); i += 8) {
      const Vec4& x = o.samples[i];
      worst = std::max(worst, (s->boundary_point(std::arg(s->mode_a(x))) - x).norm());
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("ellipsoid return map is the rigid rotation") {
  const EllipsoidCase& c = ellipsoid_case();
  const double r1s = c.p.r1 * c.p.r1, r2s = c.p.r2 * c.p.r2;
  const double angle = wrap(pi * (1 + r2s / r1s));
  Rng rng(82);
  for (int n = 0; n < 20; ++n) {
    const Vec2 a = random_interior(rng, c.s, 0.9);
    if (a.norm() < 1e-3) continue;
    const ReturnMapSample r = return_map(c.s, a);
    CHECK(std::abs(r.exit.norm() - a.norm()) < 1e-8);
    CHECK(std::abs(wrap(std::atan2(r.exit.y(), r.exit.x()) - std::atan2(a.y(), a.x()) - angle)) < 1e-8);
    CHECK(std::abs(r.time - pi * r2s / 2) < 1e-8);
  }
}

TEST_CASE("two returns compose with additive times") {
  const SectionDef& s = ellipsoid_case().s;
  Rng rng(83);
  for (int n = 0; n < 5; ++n) {
    const Vec2 a = random_interior(rng, s, 0.8);
    const ReturnMapSample first = return_map(s, a);
    const ReturnMapSample second = return_map(s, first.exit);
    const auto seq = return_sequence(s, a, 2);
    REQUIRE(seq.size() == 2);
    CHECK((seq[1].exit - second.exit).norm() < 1e-8);
    CHECK(std::abs(seq[0].time + seq[1].time - (first.time + second.time)) < 1e-9);
  }
}

TEST_CASE("every grid point returns") {
  for (const SectionDef* s : {&ellipsoid_case().s, &pcr_case().s}) {
    double tmin = 1e300, tmax = 0;
    for (const Vec2& a : section_grid(*s, 3)) {
      const ReturnMapSample r = return_map(*s, a);
      CHECK(r.time > 0);
      tmin = std::min(tmin, r.time);
      tmax = std::max(tmax, r.time);
    }
    CHECK(std::isfinite(tmax / tmin));
    CHECK(tmax / tmin < 10);
  }
}

TEST_CASE("ellipsoid fixed point is the centre, the other fiber") {
  const EllipsoidCase& c = ellipsoid_case();
  const FixedPoint fp = find_fixed_point(c.s);
  CHECK(fp.coords.norm() < 1e-8);
  CHECK(fp.map_residual < 1e-8);
  CHECK(std::abs(fp.orbit.prime_period() - ellipsoid_period(Fiber::P2, c.p)) < 1e-8);
  CHECK(verify_hopf_link(c.p1, fp.orbit) == 1);
}

TEST_CASE("ellipsoid return map preserves area") {
  const SectionDef& s = ellipsoid_case().s;
  for (double f : {0.3, 0.6, 0.85}) CHECK(area_defect(s, f, 128).defect < 1e-9);
}

TEST_CASE("Hopf fibers link once and a far small loop is unlinked") {
  const EllipsoidCase& c = ellipsoid_case();
  CHECK(verify_hopf_link(c.p1, c.p2) == 1);

  const Vec4 centre = Vec4(1, 0, 1, 0).normalized();
  const Vec4 e = Vec4(0, 1, 0, 0), f = Vec4(1, 0, -1, 0).normalized();
  std::vector<Vec4> small;
  for (int i = 0; i <= 64; ++i) {
    const double t = 2 * pi * i / 64;
    small.push_back((std::cos(0.1) * centre + std::sin(0.1) * (std::cos(t) * e + std::sin(t) * f)).normalized());
  }
  small.back() = small.front();
  const auto aux = SampledLoop::on_s3(small);
  CHECK(linking_number(SampledLoop::on_s3(unit_loop(c.p1)), aux) == 0);
  CHECK(linking_number(SampledLoop::on_s3(unit_loop(c.p2)), aux) == 0);
}

TEST_CASE("non-antipodal boundaries are rejected") {
  const EllipsoidCase& c = ellipsoid_case();
  ClosedOrbit o = c.p1;
  o.antipodal = false;
  CHECK_THROWS_AS(build_section(c.h, o), DomainError);
}

TEST_CASE("PCR3BP section: transversality and direct fixed point") {
  const PcrCase& c = pcr_case();
  CHECK(c.s.margin() > 0);
  CHECK(c.fp.map_residual < 1e-8);
  CHECK(c.fp.orbit.closure_residual < 1e-8);
  CHECK(q_winding(c.fp.orbit) == 1);

  double dmin = 1e300;
  for (const Vec4& x : c.fp.orbit.samples)
    for (const Vec4& y : c.binding.samples) dmin = std::min(dmin, (x - y).norm());
  CHECK(dmin > 1e-3);
  CHECK(verify_hopf_link(c.binding, c.fp.orbit) == 1);
}

TEST_CASE("PCR3BP section: iterated returns match one long integration") {
  const SectionDef& s = pcr_case().s;
  Rng rng(84);
  for (int n = 0; n < 3; ++n) {
    const Vec2 a = random_interior(rng, s, 0.6);
    const auto seq = return_sequence(s, a, 3);
    Vec2 x = a;
    for (int k = 0; k < 3; ++k) {
      const ReturnMapSample r = return_map(s, x);
      CHECK((r.exit - seq[k].exit).norm() < 1e-8);
      CHECK(std::abs(r.time - seq[k].time) < 1e-8);
      x = r.exit;
    }
  }
}

TEST_CASE("PCR3BP section: area defect on nested regions") {
  const SectionDef& s = pcr_case().s;
  for (double f : {0.3, 0.5, 0.7}) {
    const AreaDefect d = area_defect(s, f, 128);
    CHECK(d.area > 0);
    CHECK(d.defect < 1e-6);
  }
  // The defect is already at the integration floor with 16 boundary points;
  // refining leaves both the area and the defect unchanged.
  const AreaDefect coarse = area_defect(s, 0.7, 16);
  const AreaDefect fine = area_defect(s, 0.7, 32);
  CHECK(test::rel_diff(fine.area, coarse.area) < 1e-9);
  CHECK(fine.defect < 1e-10);
  CHECK(std::abs(fine.defect - coarse.defect) < 1e-10);
}

TEST_CASE("return CSV has the documented columns") {
  const SectionDef& s = ellipsoid_case().s;
  std::ostringstream os;
  write_return_csv(os, {return_map(s, Vec2(0.2, 0.1))});
  const std::string out = os.str();
  CHECK(out.rfind("x1,x2,x1_next,x2_next,return_time\n", 0) == 0);
  CHECK(std::count(out.begin(), out.end(), '\n') == 2);
}

TEST_CASE("points at the boundary are refused") {
  const SectionDef& s = ellipsoid_case().s;
  CHECK_THROWS_AS(return_map(s, Vec2(s.boundary_radius(0) * 0.99999999, 0)), DomainError);
}
